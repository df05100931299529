//! Potentials, one-step matrices, and transfer-matrix products.
//!
//! The operator under study acts on `ℓ²(ℤ)` or `ℓ²(ℤ⁺)` by
//! `(Hu)(n) = u(n+1) + u(n-1) + V(n)u(n)`. Rewriting the eigenvalue
//! equation `Hu = xu` as a first-order system gives the one-step matrix
//!
//! ```text
//! A(x, v) = [ x - v  -1 ]
//!           [   1     0 ]
//! ```
//!
//! and the transfer matrix `T(x, n, 0)` is the ordered product
//! `A_n ⋯ A_1` (identity at `n = 0`, inverse factors for `n ≤ -1`).
//! Products are evaluated as a strict left fold in site order, with no
//! reassociation, so results are bit-reproducible across runs and thread
//! counts.

use crate::error::{Error, Result};
use crate::mat2::Mat2;

/// Lattice site index. Half-line contexts only query sites `n ≥ 1`.
pub type Site = i64;

/// Rule assigning a real potential value to every lattice site.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// The free Laplacian, `V ≡ 0`.
    Zero,
    /// Finitely many stored values; sites outside the window return 0,
    /// which makes finite-rank perturbations exact.
    Sampled { values: Vec<f64>, offset: i64 },
    /// `V(n) = λ · v(θ + nα)` with `v` a cosine polynomial:
    /// `v(x) = Σ_j coeffs[j]·cos(2πjx)`. The almost Mathieu potential is
    /// `coeffs = [0, 2]`.
    QuasiPeriodic {
        lambda: f64,
        alpha: f64,
        theta: f64,
        cos_coeffs: Vec<f64>,
    },
    /// `V(n) = base(n) + κ·b(n)`.
    Perturbed {
        base: Box<PotentialSpec>,
        kappa: f64,
        b: Box<PotentialSpec>,
    },
}

impl PotentialSpec {
    pub fn sampled(values: Vec<f64>, offset: i64) -> Self {
        PotentialSpec::Sampled { values, offset }
    }

    pub fn perturbed(base: PotentialSpec, kappa: f64, b: PotentialSpec) -> Self {
        PotentialSpec::Perturbed {
            base: Box::new(base),
            kappa,
            b: Box::new(b),
        }
    }

    /// The potential value at site `n`.
    pub fn value(&self, n: Site) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Sampled { values, offset } => {
                let idx = n - offset;
                if idx >= 0 && (idx as usize) < values.len() {
                    values[idx as usize]
                } else {
                    0.0
                }
            }
            PotentialSpec::QuasiPeriodic {
                lambda,
                alpha,
                theta,
                cos_coeffs,
            } => {
                let x = theta + n as f64 * alpha;
                let mut v = 0.0;
                for (j, c) in cos_coeffs.iter().enumerate() {
                    v += c * (std::f64::consts::TAU * j as f64 * x).cos();
                }
                lambda * v
            }
            PotentialSpec::Perturbed { base, kappa, b } => base.value(n) + kappa * b.value(n),
        }
    }

    /// Upper bound for `‖V‖∞` (exact for zero/sampled potentials).
    pub fn sup_norm(&self) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Sampled { values, .. } => {
                values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            }
            PotentialSpec::QuasiPeriodic {
                lambda, cos_coeffs, ..
            } => lambda.abs() * cos_coeffs.iter().map(|c| c.abs()).sum::<f64>(),
            PotentialSpec::Perturbed { base, kappa, b } => {
                base.sup_norm() + kappa.abs() * b.sup_norm()
            }
        }
    }

    /// Last site after which the potential is identically zero, when that
    /// can be read off the spec. Quasi-periodic potentials return `None`.
    pub fn support_end(&self) -> Option<Site> {
        match self {
            PotentialSpec::Zero => Some(0),
            PotentialSpec::Sampled { values, offset } => {
                Some((offset + values.len() as i64 - 1).max(0))
            }
            PotentialSpec::QuasiPeriodic { .. } => None,
            PotentialSpec::Perturbed { base, b, .. } => {
                Some(base.support_end()?.max(b.support_end()?))
            }
        }
    }

    /// Order-independent digest of the spec, used to stamp data files.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        self.hash_into(&mut h);
        h.finish()
    }

    fn hash_into(&self, h: &mut Fnv1a) {
        match self {
            PotentialSpec::Zero => h.write_u64(0x01),
            PotentialSpec::Sampled { values, offset } => {
                h.write_u64(0x02);
                h.write_u64(*offset as u64);
                for v in values {
                    h.write_u64(v.to_bits());
                }
            }
            PotentialSpec::QuasiPeriodic {
                lambda,
                alpha,
                theta,
                cos_coeffs,
            } => {
                h.write_u64(0x03);
                h.write_u64(lambda.to_bits());
                h.write_u64(alpha.to_bits());
                h.write_u64(theta.to_bits());
                for c in cos_coeffs {
                    h.write_u64(c.to_bits());
                }
            }
            PotentialSpec::Perturbed { base, kappa, b } => {
                h.write_u64(0x04);
                base.hash_into(h);
                h.write_u64(kappa.to_bits());
                b.hash_into(h);
            }
        }
    }
}

/// FNV-1a, 64-bit. Stable across platforms; used only for file stamps.
struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf29ce484222325)
    }
    fn write_u64(&mut self, v: u64) {
        for byte in v.to_le_bytes() {
            self.0 ^= byte as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }
    fn finish(&self) -> u64 {
        self.0
    }
}

/// Half-line boundary condition `u(0)cos β + u(1)sin β = 0`.
///
/// The admissible range here is the open interval `(-π/2, π/2)`; `β = 0`
/// is the Dirichlet condition. The associated initial vector for transfer
/// products is `u_β = (cos β, -sin β)` (as `(u(1), u(0))`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryCondition {
    beta: f64,
}

impl BoundaryCondition {
    pub const DIRICHLET: BoundaryCondition = BoundaryCondition { beta: 0.0 };

    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::InvalidParameter(format!(
                "boundary angle {beta} outside (-pi/2, pi/2)"
            )));
        }
        Ok(BoundaryCondition { beta })
    }

    /// `β = π/4`, the mixed condition with a square-root singularity of the
    /// free density at `x = -2`.
    pub fn mixed_plus() -> Self {
        BoundaryCondition { beta: std::f64::consts::FRAC_PI_4 }
    }

    /// `β = -π/4`; singular at `x = +2` instead.
    pub fn mixed_minus() -> Self {
        BoundaryCondition { beta: -std::f64::consts::FRAC_PI_4 }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Unit vector `(cos β, -sin β)`.
    pub fn vector(&self) -> [f64; 2] {
        [self.beta.cos(), -self.beta.sin()]
    }
}

/// Exponential decay envelope `|b(n)| ≤ γ (a + 2‖V‖∞)^{-τ|n|}`.
///
/// Construction enforces `a > 3` and `τ > 4`; [`DecayEnvelope::new_relaxed`]
/// lowers the first requirement to `a > 2`, which suffices for the half-line
/// statements but not for the unified treatment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    gamma: f64,
    a: f64,
    tau: f64,
    vnorm: f64,
    relaxed: bool,
}

impl DecayEnvelope {
    pub fn new(gamma: f64, a: f64, tau: f64, vnorm: f64) -> Result<Self> {
        Self::build(gamma, a, tau, vnorm, false)
    }

    /// Same envelope with the weaker requirement `a > 2`.
    pub fn new_relaxed(gamma: f64, a: f64, tau: f64, vnorm: f64) -> Result<Self> {
        Self::build(gamma, a, tau, vnorm, true)
    }

    fn build(gamma: f64, a: f64, tau: f64, vnorm: f64, relaxed: bool) -> Result<Self> {
        let a_min = if relaxed { 2.0 } else { 3.0 };
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma = {gamma} must be > 0")));
        }
        if !(a > a_min) {
            return Err(Error::InvalidParameter(format!("a = {a} must be > {a_min}")));
        }
        if !(tau > 4.0) {
            return Err(Error::InvalidParameter(format!("tau = {tau} must be > 4")));
        }
        if !(vnorm >= 0.0) {
            return Err(Error::InvalidParameter(format!("vnorm = {vnorm} must be >= 0")));
        }
        Ok(DecayEnvelope { gamma, a, tau, vnorm, relaxed })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn vnorm(&self) -> f64 {
        self.vnorm
    }

    /// The growth base `a + 2‖V‖∞`.
    pub fn base(&self) -> f64 {
        self.a + 2.0 * self.vnorm
    }

    /// Envelope value `γ·(a + 2‖V‖∞)^{-τ|n|}` at site `n`.
    pub fn bound_at(&self, n: Site) -> f64 {
        self.gamma * self.base().powf(-self.tau * n.unsigned_abs() as f64)
    }

    /// Check that a perturbation obeys this envelope on `|n| ≤ range`.
    pub fn admits(&self, b: &PotentialSpec, range: Site) -> Result<()> {
        for n in -range..=range {
            let v = b.value(n).abs();
            let bound = self.bound_at(n);
            if v > bound {
                return Err(Error::EnvelopeViolation { site: n, value: v, bound });
            }
        }
        Ok(())
    }
}

/// One-step matrix `[[x - v, -1], [1, 0]]`; determinant 1 by construction.
pub fn step_matrix(x: f64, v: f64) -> Mat2 {
    Mat2::new(x - v, -1.0, 1.0, 0.0)
}

/// Exact inverse `[[0, 1], [-1, x - v]]` of the one-step matrix.
pub fn step_matrix_inverse(x: f64, v: f64) -> Mat2 {
    Mat2::new(0.0, 1.0, -1.0, x - v)
}

/// Transfer matrix `T(x, n, 0)`.
///
/// `A_n ⋯ A_1` for `n ≥ 1`, the identity for `n = 0`, and
/// `A⁻¹_{n+1} ⋯ A⁻¹_0` for `n ≤ -1`. Entries are checked for overflow at
/// every step and the failing site is reported.
pub fn transfer(x: f64, spec: &PotentialSpec, n: Site) -> Result<Mat2> {
    let mut m = Mat2::IDENTITY;
    if n >= 0 {
        for j in 1..=n {
            m = step_matrix(x, spec.value(j)) * m;
            if !m.is_finite() {
                return Err(Error::Overflow { site: j });
            }
        }
    } else {
        let mut j = 0;
        while j >= n + 1 {
            m = step_matrix_inverse(x, spec.value(j)) * m;
            if !m.is_finite() {
                return Err(Error::Overflow { site: j });
            }
            j -= 1;
        }
    }
    Ok(m)
}

/// `T(x, n, 0) · u` for `n ≥ 0` without forming the matrix product.
///
/// Same fold order as [`transfer`], applied to the two-component state,
/// so one step costs three flops instead of a matrix multiply.
pub fn transfer_apply(x: f64, spec: &PotentialSpec, n: Site, u: [f64; 2]) -> Result<[f64; 2]> {
    debug_assert!(n >= 0);
    let mut p = u[0];
    let mut q = u[1];
    for j in 1..=n {
        let next = (x - spec.value(j)) * p - q;
        q = p;
        p = next;
        if !p.is_finite() {
            return Err(Error::Overflow { site: j });
        }
    }
    Ok([p, q])
}

/// `A(x)^m · u` for the free one-step matrix, `|x| < 2`, via the closed
/// form `A^m = [[U_m, -U_{m-1}], [U_{m-1}, -U_{m-2}]]` with
/// `U_m = sin((m+1)θ)/sin θ`, `x = 2cos θ`.
///
/// Cost is O(1) in `m`, which is what makes deep approximants affordable
/// for potentials of finite support: beyond the support the product is a
/// pure power of `A(x)`.
pub fn free_power_apply(x: f64, m: i64, u: [f64; 2]) -> Result<[f64; 2]> {
    debug_assert!(m >= 0);
    if x.abs() >= 2.0 {
        return Err(Error::OutsideBand(x));
    }
    let theta = (x / 2.0).acos();
    let s = theta.sin();
    let m = m as f64;
    let u_m = ((m + 1.0) * theta).sin() / s;
    let u_m1 = (m * theta).sin() / s;
    let u_m2 = ((m - 1.0) * theta).sin() / s;
    Ok([u_m * u[0] - u_m1 * u[1], u_m1 * u[0] - u_m2 * u[1]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn am_spec(lambda: f64, alpha: f64, theta: f64) -> PotentialSpec {
        PotentialSpec::QuasiPeriodic {
            lambda,
            alpha,
            theta,
            cos_coeffs: vec![0.0, 2.0],
        }
    }

    #[test]
    fn potential_values() {
        assert_eq!(PotentialSpec::Zero.value(7), 0.0);
        // cos(0) = 1 doubled
        let qp = am_spec(1.0, 0.5, 0.0);
        assert!((qp.value(0) - 2.0).abs() < 1e-15);
        // direct sum
        let p = PotentialSpec::perturbed(
            PotentialSpec::Zero,
            0.5,
            PotentialSpec::sampled(vec![1.0], 1),
        );
        assert_eq!(p.value(1), 0.5);
        assert_eq!(p.value(2), 0.0);
    }

    #[test]
    fn step_matrix_entries() {
        assert_eq!(step_matrix(0.0, 0.0), Mat2::new(0.0, -1.0, 1.0, 0.0));
        assert_eq!(step_matrix(1.5, 0.5), Mat2::new(1.0, -1.0, 1.0, 0.0));
        assert_eq!(step_matrix(2.0, 0.0), Mat2::new(2.0, -1.0, 1.0, 0.0));
        assert_eq!(step_matrix(1.5, 0.5).det(), 1.0);
    }

    #[test]
    fn free_transfer_at_zero_energy_is_periodic() {
        // A(0) is a quarter-turn rotation, so A⁴ = I.
        let t = transfer(0.0, &PotentialSpec::Zero, 4).unwrap();
        assert_eq!(t, Mat2::IDENTITY);
    }

    #[test]
    fn free_transfer_at_band_edge() {
        // A(2)ⁿ = [[n+1, -n], [n, -(n-1)]] by induction.
        let t = transfer(2.0, &PotentialSpec::Zero, 3).unwrap();
        assert_eq!(t, Mat2::new(4.0, -3.0, 3.0, -2.0));
    }

    #[test]
    fn transfer_det_is_one_for_random_bounded_spec() {
        let values: Vec<f64> = (0..128)
            .map(|i| {
                let r = crate::quasiperiodic::splitmix64(0x5eed ^ i as u64);
                ((r >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0) * 0.3
            })
            .collect();
        let spec = PotentialSpec::sampled(values, 1);
        let t = transfer(0.7, &spec, 100).unwrap();
        assert!((t.det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn semigroup_recursion_is_exact() {
        let spec = am_spec(0.1, 0.618033988749895, 0.0);
        let x = 0.7;
        for n in [0, 1, 5, 17] {
            let t_n = transfer(x, &spec, n).unwrap();
            let t_next = transfer(x, &spec, n + 1).unwrap();
            assert_eq!(t_next, step_matrix(x, spec.value(n + 1)) * t_n);
        }
    }

    #[test]
    fn negative_transfer_inverts_positive() {
        let spec = PotentialSpec::sampled(vec![0.3, -0.2, 0.5], -1);
        let x = 0.4;
        // T(x, -1, 0) = A₀⁻¹, and A₀ = step at site 0.
        let t = transfer(x, &spec, -1).unwrap();
        assert_eq!(t, step_matrix_inverse(x, spec.value(0)));
        let prod = transfer(x, &spec, -3).unwrap();
        let direct = step_matrix_inverse(x, spec.value(-2))
            * (step_matrix_inverse(x, spec.value(-1)) * step_matrix_inverse(x, spec.value(0)));
        assert_eq!(prod, direct);
    }

    #[test]
    fn unimodular_norm_symmetry() {
        let spec = am_spec(0.1, 0.618033988749895, 0.3);
        let t = transfer(1.3, &spec, 200).unwrap();
        assert!((t.norm() - t.inverse_unimodular().norm()).abs() <= 1e-12 * t.norm());
    }

    #[test]
    fn transfer_apply_matches_matrix_product() {
        let spec = am_spec(0.1, 0.618033988749895, 0.1);
        let u = [0.6, -0.8];
        let x = -0.9;
        let via_matrix = transfer(x, &spec, 300).unwrap().apply(u);
        let via_fold = transfer_apply(x, &spec, 300, u).unwrap();
        assert!((via_matrix[0] - via_fold[0]).abs() < 1e-12);
        assert!((via_matrix[1] - via_fold[1]).abs() < 1e-12);
    }

    #[test]
    fn free_power_apply_matches_fold() {
        let u = [0.3, 1.1];
        for x in [-1.7, -0.4, 0.0, 1.2, 1.95] {
            let direct = transfer_apply(x, &PotentialSpec::Zero, 5000, u).unwrap();
            let fast = free_power_apply(x, 5000, u).unwrap();
            let scale = direct[0].abs().max(direct[1].abs()).max(1.0);
            assert!((direct[0] - fast[0]).abs() < 1e-9 * scale);
            assert!((direct[1] - fast[1]).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn envelope_construction_guards() {
        assert!(DecayEnvelope::new(1.0, 4.0, 5.0, 0.0).is_ok());
        assert!(DecayEnvelope::new(1.0, 2.5, 5.0, 0.0).is_err());
        assert!(DecayEnvelope::new_relaxed(1.0, 2.5, 5.0, 0.0).is_ok());
        assert!(DecayEnvelope::new(1.0, 4.0, 4.0, 0.0).is_err());
        assert!(DecayEnvelope::new(0.0, 4.0, 5.0, 0.0).is_err());
    }

    #[test]
    fn envelope_bound_arithmetic() {
        // a = 4, τ = 5, γ = 1: |b(3)| ≤ 4⁻¹⁵
        let env = DecayEnvelope::new(1.0, 4.0, 5.0, 0.0).unwrap();
        assert!((env.bound_at(3) - 4.0_f64.powi(-15)).abs() < 1e-24);
    }

    #[test]
    fn boundary_condition_vector_is_unit() {
        let bc = BoundaryCondition::new(0.4).unwrap();
        let v = bc.vector();
        assert!((v[0] * v[0] + v[1] * v[1] - 1.0).abs() < 1e-15);
        assert!(BoundaryCondition::new(std::f64::consts::FRAC_PI_2).is_err());
    }

    #[test]
    fn growth_envelope_along_the_band() {
        // ‖T^κ(x, n, 0)‖^(1/n) ≤ a + 2‖V‖∞ for n ≥ 32 on the spectral window.
        let base = am_spec(0.1, 0.618033988749895, 0.0);
        let b = crate::quasiperiodic::exp_decay_perturbation(1.0, 4.0, 5.0, 0.1, 2.0, 7, 48).unwrap();
        let spec = PotentialSpec::perturbed(base, 0.9, b);
        let cap = 4.0 + 2.0 * 0.2;
        for &x in &[-3.2, -1.0, 0.0, 0.5, 2.0, 3.2] {
            for &n in &[32_i64, 64, 128] {
                let t = transfer(x, &spec, n).unwrap();
                assert!(t.norm().powf(1.0 / n as f64) <= cap);
            }
        }
    }
}
