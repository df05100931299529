use thiserror::Error;

/// Errors reported by the numerical operations in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("energy {0} lies outside the open band (-2, 2)")]
    OutsideBand(f64),
    #[error("expected a point in the upper half-plane, got Im z = {0}")]
    NotInUpperHalfPlane(f64),
    #[error("matrix entries overflowed near site {site}")]
    Overflow { site: i64 },
    #[error("matrix lists differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("series tail bound {bound:.3e} still above {target:.3e} after {terms} terms")]
    Unconverged { bound: f64, target: f64, terms: usize },
    #[error("coupling {kappa} exceeds the admissible range 1/||b||_inf = {limit}")]
    CouplingTooLarge { kappa: f64, limit: f64 },
    #[error("perturbation breaks its decay envelope at site {site}: |b| = {value:.6e} > {bound:.6e}")]
    EnvelopeViolation { site: i64, value: f64, bound: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature grid is empty")]
    EmptyGrid,
    #[error("window [{left}, {right}] must stay strictly inside (-2, 2)")]
    WindowTouchesEdge { left: f64, right: f64 },
    #[error("m-function oracle unavailable for this potential: {0}")]
    UnsupportedSpec(&'static str),
    #[error("reference measure mass is below the floor on every scanned interval")]
    ReferenceMassFloor,
    #[error("need at least {need} samples in the fit window, found {found}")]
    TooFewSamples { need: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
