//! Real 2×2 matrices with the Frobenius norm.
//!
//! Everything transfer-matrix shaped in this crate — one-step matrices,
//! ordered products, the expansion limits `Q` and `P`, the cumulative
//! quadratic forms `P_k` — is carried by [`Mat2`]. The norm is always
//! `‖A‖ = √tr(AAᵀ)`; for unimodular matrices this gives `‖A‖ = ‖A⁻¹‖`,
//! which several estimates rely on.

use std::ops::{Add, Mul, Neg, Sub};

/// Real 2×2 matrix, row-major: `[[m11, m12], [m21, m22]]`.
#[derive(Clone, Copy, PartialEq, Debug, Default)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { m11: 1.0, m12: 0.0, m21: 0.0, m22: 1.0 };
    pub const ZERO: Mat2 = Mat2 { m11: 0.0, m12: 0.0, m21: 0.0, m22: 0.0 };

    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    /// Exact 2×2 determinant.
    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    /// Frobenius norm `√tr(AAᵀ)`.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.m11 * self.m11 + self.m12 * self.m12 + self.m21 * self.m21 + self.m22 * self.m22
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m11, self.m21, self.m12, self.m22)
    }

    /// Inverse of a matrix with determinant exactly 1 (the adjugate).
    ///
    /// No division is performed, so entries of the result are exact
    /// rearrangements of the input entries.
    pub fn inverse_unimodular(&self) -> Mat2 {
        Mat2::new(self.m22, -self.m12, -self.m21, self.m11)
    }

    /// General inverse; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(self.m22 / d, -self.m12 / d, -self.m21 / d, self.m11 / d))
    }

    pub fn scale(&self, c: f64) -> Mat2 {
        Mat2::new(c * self.m11, c * self.m12, c * self.m21, c * self.m22)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }

    /// `AᵀA`, the Gram matrix. Symmetric positive semi-definite.
    pub fn gram(&self) -> Mat2 {
        self.transpose() * *self
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m21.is_finite() && self.m22.is_finite()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.m11
            .abs()
            .max(self.m12.abs())
            .max(self.m21.abs())
            .max(self.m22.abs())
    }

    /// Smallest eigenvalue, assuming the matrix is symmetric.
    pub fn min_eigenvalue_symmetric(&self) -> f64 {
        let mean = 0.5 * (self.m11 + self.m22);
        let half_gap = 0.5 * (self.m11 - self.m22);
        let b = 0.5 * (self.m12 + self.m21);
        mean - (half_gap * half_gap + b * b).sqrt()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * rhs.m11 + self.m12 * rhs.m21,
            self.m11 * rhs.m12 + self.m12 * rhs.m22,
            self.m21 * rhs.m11 + self.m22 * rhs.m21,
            self.m21 * rhs.m12 + self.m22 * rhs.m22,
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 + rhs.m11,
            self.m12 + rhs.m12,
            self.m21 + rhs.m21,
            self.m22 + rhs.m22,
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 - rhs.m11,
            self.m12 - rhs.m12,
            self.m21 - rhs.m21,
            self.m22 - rhs.m22,
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unimodular_inverse_is_exact() {
        let a = Mat2::new(1.5, -1.0, 1.0, 0.0);
        let inv = a.inverse_unimodular();
        assert_eq!(a * inv, Mat2::IDENTITY);
        assert_eq!(inv * a, Mat2::IDENTITY);
    }

    #[test]
    fn norm_equals_inverse_norm_when_unimodular() {
        // ‖B‖ = ‖B⁻¹‖ whenever det B = 1.
        let b = Mat2::new(2.0, -1.0, 1.0, 0.0) * Mat2::new(0.3, -1.0, 1.0, 0.0);
        assert!((b.det() - 1.0).abs() < 1e-14);
        assert!((b.norm() - b.inverse_unimodular().norm()).abs() < 1e-12);
    }

    #[test]
    fn min_eigenvalue_of_symmetric() {
        let m = Mat2::new(3.0, 1.0, 1.0, 2.0);
        // eigenvalues (5 ± √5)/2
        let expect = (5.0 - 5.0_f64.sqrt()) / 2.0;
        assert!((m.min_eigenvalue_symmetric() - expect).abs() < 1e-14);
    }

    #[test]
    fn gram_is_symmetric_psd() {
        let a = Mat2::new(0.7, -1.0, 1.0, 0.0);
        let g = a.gram();
        assert_eq!(g.m12, g.m21);
        assert!(g.min_eigenvalue_symmetric() >= 0.0);
    }
}
