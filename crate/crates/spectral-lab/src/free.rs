//! Closed-form reference objects for the free Laplacian.
//!
//! On the band `x = 2cos θ ∈ (-2, 2)` the free one-step matrix
//! diagonalizes as `A = P D P⁻¹` with unimodular eigenvalues `e^{±iθ}`,
//! which yields closed forms for everything the rest of the crate needs
//! to test against: the norm of the rotated boundary vector, the spectral
//! density `ρ_β` under a boundary condition `β`, and the half-line
//! m-function. These are the oracles every approximation is measured by.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat2::Mat2;

/// Spectral parameter `θ = arccos(x/2) ∈ (0, π)` for `x ∈ (-2, 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeAngle {
    theta: f64,
}

impl FreeAngle {
    pub fn from_energy(x: f64) -> Result<Self> {
        if !(x.abs() < 2.0) {
            return Err(Error::OutsideBand(x));
        }
        Ok(FreeAngle { theta: (x / 2.0).acos() })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn energy(&self) -> f64 {
        2.0 * self.theta.cos()
    }
}

/// Complex 2×2 matrix, row-major. Only what the eigendecomposition needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMat2 {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl ComplexMat2 {
    pub fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        ComplexMat2 { m11, m12, m21, m22 }
    }

    pub fn mul(&self, rhs: &ComplexMat2) -> ComplexMat2 {
        ComplexMat2::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }

    pub fn inverse(&self) -> Option<ComplexMat2> {
        let det = self.m11 * self.m22 - self.m12 * self.m21;
        if det.norm() == 0.0 {
            return None;
        }
        Some(ComplexMat2::new(
            self.m22 / det,
            -self.m12 / det,
            -self.m21 / det,
            self.m11 / det,
        ))
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }

    /// Largest absolute difference to a real matrix, entrywise.
    pub fn distance_to_real(&self, m: &Mat2) -> f64 {
        (self.m11 - m.m11)
            .norm()
            .max((self.m12 - m.m12).norm())
            .max((self.m21 - m.m21).norm())
            .max((self.m22 - m.m22).norm())
    }
}

/// Eigendecomposition `A(x) = P D P⁻¹` of the free step matrix,
/// with `P = [[1, 1], [e^{-iθ}, e^{iθ}]]` and `D = diag(e^{iθ}, e^{-iθ})`.
pub fn free_decomposition(x: f64) -> Result<(ComplexMat2, ComplexMat2, FreeAngle)> {
    let angle = FreeAngle::from_energy(x)?;
    let e_plus = Complex64::from_polar(1.0, angle.theta);
    let e_minus = Complex64::from_polar(1.0, -angle.theta);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let p = ComplexMat2::new(one, one, e_minus, e_plus);
    let d = ComplexMat2::new(e_plus, zero, zero, e_minus);
    Ok((p, d, angle))
}

/// `‖Dⁿ P⁻¹ u_β‖² = (1 + cos θ · sin 2β) / (2 sin² θ)`.
///
/// Independent of `n`: the diagonal factor is unitary. The argument is
/// kept so call sites read like the quantity they compute.
pub fn free_vector_norm_sq(angle: &FreeAngle, beta: f64, _n: u32) -> f64 {
    let c = angle.theta.cos();
    let s = angle.theta.sin();
    (1.0 + c * (2.0 * beta).sin()) / (2.0 * s * s)
}

/// Density `ρ_β(x) = cos²β · √(4 - x²) / (π(2 + sin(2β)·x))` of the free
/// half-line spectral measure for the boundary condition `β`, `x ∈ (-2, 2)`.
///
/// Energies outside the open band are a hard error rather than zero:
/// silent zeros would mask grid mistakes in measure construction.
pub fn free_density(x: f64, beta: f64) -> Result<f64> {
    if !(x.abs() < 2.0) {
        return Err(Error::OutsideBand(x));
    }
    let c = beta.cos();
    Ok(c * c * (4.0 - x * x).sqrt() / (std::f64::consts::PI * (2.0 + (2.0 * beta).sin() * x)))
}

/// Half-line m-function `G_β(z)` of the free Laplacian, `Im z > 0`.
///
/// Built from the root `ζ` of `ζ² - zζ + 1 = 0` with `|ζ| < 1` (the ℓ²
/// branch; strict since `Im z > 0` keeps `|ζ| ≠ 1`):
/// `G_β = -cos β · ζ / (cos β + ζ sin β)`.
pub fn free_m_function(z: Complex64, beta: f64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::NotInUpperHalfPlane(z.im));
    }
    let zeta = small_root(z);
    let c = Complex64::new(beta.cos(), 0.0);
    let s = Complex64::new(beta.sin(), 0.0);
    Ok(-c * zeta / (c + zeta * s))
}

/// The `|ζ| < 1` root of `ζ² - zζ + 1 = 0`.
///
/// Computed as the reciprocal of the large root to avoid cancellation:
/// the two roots multiply to 1 exactly.
pub(crate) fn small_root(z: Complex64) -> Complex64 {
    let s = (z * z - 4.0).sqrt();
    // Pick the sign that adds constructively, then invert.
    let big = if (z.re * s.re + z.im * s.im) >= 0.0 {
        (z + s) * 0.5
    } else {
        (z - s) * 0.5
    };
    big.finv()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::step_matrix;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    #[test]
    fn decomposition_angles() {
        let (_, d, angle) = free_decomposition(0.0).unwrap();
        assert!((angle.theta() - FRAC_PI_2).abs() < 1e-15);
        assert!((d.m11 - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!((d.m22 - Complex64::new(0.0, -1.0)).norm() < 1e-15);

        let (_, _, angle) = free_decomposition(2.0_f64.sqrt()).unwrap();
        assert!((angle.theta() - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn decomposition_reconstructs_step_matrix() {
        for &x in &[1.0, -1.3, 0.2, 1.9] {
            let (p, d, angle) = free_decomposition(x).unwrap();
            if x == 1.0 {
                assert!((angle.theta() - FRAC_PI_3).abs() < 1e-15);
            }
            let a = p.mul(&d).mul(&p.inverse().unwrap());
            assert!(a.distance_to_real(&step_matrix(x, 0.0)) < 1e-12);
        }
        assert!(free_decomposition(2.0).is_err());
        assert!(free_decomposition(-2.5).is_err());
    }

    #[test]
    fn rotated_vector_norm_closed_form() {
        let angle = FreeAngle::from_energy(0.0).unwrap();
        assert!((free_vector_norm_sq(&angle, 0.0, 5) - 0.5).abs() < 1e-15);

        // θ = π/3, β = π/4: (1 + 0.5)/(2·0.75) = 1
        let angle = FreeAngle::from_energy(1.0).unwrap();
        assert!((free_vector_norm_sq(&angle, FRAC_PI_4, 1) - 1.0).abs() < 1e-14);

        // n-independence is structural; spot-check the signature contract.
        let a = free_vector_norm_sq(&angle, 0.3, 1);
        let b = free_vector_norm_sq(&angle, 0.3, 100);
        assert_eq!(a, b);
    }

    #[test]
    fn density_closed_form_values() {
        assert!((free_density(0.0, 0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((free_density(0.0, FRAC_PI_4).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(free_density(2.0, 0.0).is_err());
        assert!(free_density(-2.0, FRAC_PI_4).is_err());
    }

    #[test]
    fn density_edge_singularity_exponent() {
        // ρ_{π/4}(-2 + δ) ~ δ^{-1/2}/π: the ϱ = 1/2 edge.
        for &delta in &[1e-4, 1e-6, 1e-8] {
            let x = -2.0 + delta;
            let rho = free_density(x, FRAC_PI_4).unwrap();
            let predicted = 1.0 / (PI * delta.sqrt());
            assert!(
                (rho / predicted - 1.0).abs() < 0.05,
                "delta = {delta}: {rho} vs {predicted}"
            );
        }
    }

    #[test]
    fn m_function_at_i_dirichlet() {
        // ζ² - iζ + 1 = 0, |ζ| < 1 root is ζ = i(1 - √5)/2, so G = i(√5-1)/2.
        let g = free_m_function(Complex64::new(0.0, 1.0), 0.0).unwrap();
        let expect = (5.0_f64.sqrt() - 1.0) / 2.0;
        assert!(g.re.abs() < 1e-15);
        assert!((g.im - expect).abs() < 1e-14);
        assert!(free_m_function(Complex64::new(0.0, -1.0), 0.0).is_err());
    }

    #[test]
    fn stone_limit_recovers_density() {
        // Im G_β(x + iε)/π → ρ_β(x) as ε → 0⁺.
        for &beta in &[0.0, FRAC_PI_4, -FRAC_PI_4] {
            for &x in &[-1.5, -0.3, 0.0, 0.9, 1.8] {
                let g = free_m_function(Complex64::new(x, 1e-8), beta).unwrap();
                let rho = free_density(x, beta).unwrap();
                assert!(
                    (g.im / PI - rho).abs() < 1e-6,
                    "beta = {beta}, x = {x}"
                );
            }
        }
    }

    #[test]
    fn herglotz_property_on_a_grid() {
        for i in 0..64 {
            let beta = -1.5 + 3.0 * i as f64 / 63.0;
            for &im in &[1e-9, 1e-4, 0.1, 1.0, 10.0] {
                for &re in &[-2.5, -1.0, 0.0, 0.7, 2.5] {
                    let g = free_m_function(Complex64::new(re, im), beta).unwrap();
                    assert!(g.im > 0.0, "Im G = {} at z = {re}+{im}i, beta = {beta}", g.im);
                }
            }
        }
    }

    #[test]
    fn dirichlet_measure_is_probability() {
        // ∫ ρ_0 over (-2, 2) = 1; midpoint rule under x = 2cosθ.
        let n = 20_000;
        let h = PI / n as f64;
        let mut mass = 0.0;
        for j in 0..n {
            let theta = (j as f64 + 0.5) * h;
            let x = 2.0 * theta.cos();
            mass += free_density(x, 0.0).unwrap() * 2.0 * theta.sin() * h;
        }
        assert!((mass - 1.0).abs() < 1e-8);
    }
}
