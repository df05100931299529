//! Numerical laboratory for one-dimensional discrete Schrödinger operators
//! under exponentially decaying perturbations.
//!
//! The crate computes transfer matrices and their perturbation expansions,
//! closed-form free-Laplacian references, quadrature approximations of
//! half-line spectral measures, dyadic Hölder moduli, and time-averaged
//! quantum return probabilities, and ships the quantitative checks tying
//! them together: norm sandwiches, `P_k` ratio confinement, ψ-brackets of
//! the m-function, measure domination, and decay-regime fits.
//!
//! Entry points by theme:
//!
//! - [`lattice`]: potentials, one-step matrices, transfer products.
//! - [`free`]: the free Laplacian's eigendecomposition, densities `ρ_β`,
//!   and half-line m-function — the oracles everything else is tested
//!   against.
//! - [`asymptotics`]: telescoping, the `Q`/`R_n` expansion, `P_k`
//!   families, ψ and the m-function bracket, Cesàro diagnostics.
//! - [`measure`]: quadrature measures, interval masses, Hölder scans,
//!   domination ratios.
//! - [`dynamics`]: Fourier transforms, return probabilities, decay fits,
//!   the singularity-type trichotomy.
//! - [`quasiperiodic`]: almost Mathieu potentials, Diophantine checks,
//!   reproducible decaying perturbations.
//!
//! The companion guide under `book/` walks through the same material
//! chapter by chapter; its code blocks compile and run as doctests of
//! this crate.

pub mod asymptotics;
pub mod dynamics;
mod error;
pub mod free;
pub mod lattice;
pub mod mat2;
pub mod measure;
pub mod quasiperiodic;

pub use error::{Error, Result};
pub use lattice::{BoundaryCondition, DecayEnvelope, PotentialSpec, Site};
pub use mat2::Mat2;
pub use measure::QuadratureMeasure;

/// The book's code blocks double as doctests so the guide can never
/// drift from the library.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            mod $name {}
        };
    }

    chapter!(transfer_matrices, "../../../book/src/transfer-matrices.md");
    chapter!(free_laplacian, "../../../book/src/free-laplacian.md");
    chapter!(perturbation_expansions, "../../../book/src/perturbation-expansions.md");
    chapter!(pk_and_brackets, "../../../book/src/pk-and-brackets.md");
    chapter!(spectral_measures, "../../../book/src/spectral-measures.md");
    chapter!(quantum_dynamics, "../../../book/src/quantum-dynamics.md");
    chapter!(quasiperiodic, "../../../book/src/quasiperiodic.md");
}
