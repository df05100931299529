//! Quasi-periodic potentials, Diophantine checks, and envelope-compliant
//! decaying perturbations.

use crate::error::{Error, Result};
use crate::lattice::{PotentialSpec, Site};

/// SplitMix64 finalizer. With `z = state + 0x9E3779B97F4A7C15`:
///
/// ```text
/// z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
/// z ^= z >> 27;  z *= 0x94D049BB133111EB;
/// z ^= z >> 31;
/// ```
///
/// All arithmetic is wrapping 64-bit. The recurrence is spelled out so any
/// language can reproduce generated sequences bit-for-bit.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Counter-based site hash: `splitmix64(seed XOR zigzag(n)·0x9E3779B97F4A7C15)`
/// where `zigzag(n) = 2n` for `n ≥ 0` and `-2n - 1` otherwise.
pub fn site_hash(seed: u64, n: Site) -> u64 {
    let z = if n >= 0 { 2 * n as u64 } else { (-2 * n - 1) as u64 };
    splitmix64(seed ^ z.wrapping_mul(0x9E3779B97F4A7C15))
}

/// `λ·2cos(2π(θ + nα))`, the almost Mathieu potential.
pub fn almost_mathieu_potential(lambda: f64, alpha: f64, theta: f64, n: Site) -> f64 {
    lambda * 2.0 * (std::f64::consts::TAU * (theta + n as f64 * alpha)).cos()
}

/// Spec form of the almost Mathieu potential (`v(x) = 2cos(2πx)`).
pub fn almost_mathieu_spec(lambda: f64, alpha: f64, theta: f64) -> PotentialSpec {
    PotentialSpec::QuasiPeriodic {
        lambda,
        alpha,
        theta,
        cos_coeffs: vec![0.0, 2.0],
    }
}

/// The golden mean `(√5 - 1)/2`, the canonical badly approximable frequency.
pub fn golden_mean() -> f64 {
    (5.0_f64.sqrt() - 1.0) / 2.0
}

/// Parameters of the Diophantine condition `|nα - j| > η/|n|^τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiophantineParams {
    pub eta: f64,
    pub tau_dc: f64,
    pub alpha: f64,
}

impl DiophantineParams {
    pub fn new(eta: f64, tau_dc: f64, alpha: f64) -> Result<Self> {
        if !(eta > 0.0) || !(tau_dc > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta = {eta} and tau = {tau_dc} must be positive"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1)")));
        }
        Ok(DiophantineParams { eta, tau_dc, alpha })
    }
}

/// Outcome of a finite Diophantine verification.
///
/// A finite scan can only falsify or support the condition; `holds` means
/// "holds up to `n_max`", nothing more.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiophantineReport {
    pub holds: bool,
    pub n_max: u64,
    /// The denominator with the smallest margin `|nα - j| / (η/n^τ)`.
    pub worst_n: u64,
    /// Nearest integer to `worst_n · α`.
    pub worst_j: i64,
    /// The gap `|nα - j|` at the worst denominator.
    pub worst_gap: f64,
    /// `worst_gap / (η / worst_n^τ)`; `> 1` iff the condition held there.
    pub worst_margin: f64,
}

/// Verify `|nα - nearest integer| > η/n^τ` for `1 ≤ n ≤ n_max`.
pub fn diophantine_check(params: &DiophantineParams, n_max: u64) -> DiophantineReport {
    assert!(n_max >= 1, "n_max must be at least 1");
    let mut worst = (1u64, 0i64, f64::INFINITY, f64::INFINITY);
    let mut holds = true;
    for n in 1..=n_max {
        let na = n as f64 * params.alpha;
        let j = na.round();
        let gap = (na - j).abs();
        let bound = params.eta / (n as f64).powf(params.tau_dc);
        let margin = gap / bound;
        if margin <= 1.0 {
            holds = false;
        }
        if margin < worst.3 {
            worst = (n, j as i64, gap, margin);
        }
    }
    DiophantineReport {
        holds,
        n_max,
        worst_n: worst.0,
        worst_j: worst.1,
        worst_gap: worst.2,
        worst_margin: worst.3,
    }
}

/// Pseudorandom signed perturbation saturating the decay envelope
/// `|b(n)| = γ (a + 2|λ|·vnorm)^{-τ|n|}` on `|n| ≤ n_range`, with signs
/// drawn from [`site_hash`]. Same seed, same sequence, bit for bit.
pub fn exp_decay_perturbation(
    gamma: f64,
    a: f64,
    tau: f64,
    lambda: f64,
    vnorm: f64,
    seed: u64,
    n_range: Site,
) -> Result<PotentialSpec> {
    if n_range < 0 {
        return Err(Error::InvalidParameter(format!("n_range = {n_range} must be >= 0")));
    }
    // Parameter validation is shared with the envelope type.
    let env = crate::lattice::DecayEnvelope::new(gamma, a, tau, lambda.abs() * vnorm)?;
    let base = env.base();
    let values: Vec<f64> = (-n_range..=n_range)
        .map(|n| {
            let sign = if site_hash(seed, n) & 1 == 1 { 1.0 } else { -1.0 };
            sign * gamma * base.powf(-tau * n.unsigned_abs() as f64)
        })
        .collect();
    Ok(PotentialSpec::sampled(values, -n_range))
}

/// Largest admissible coupling `1/‖b‖∞` for a perturbation.
pub fn max_admissible_kappa(b: &PotentialSpec) -> f64 {
    let s = b.sup_norm();
    if s == 0.0 {
        f64::INFINITY
    } else {
        1.0 / s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn almost_mathieu_values() {
        assert!((almost_mathieu_potential(1.0, 0.33, 0.0, 0) - 2.0).abs() < 1e-15);
        let alpha = golden_mean();
        let v = almost_mathieu_potential(0.1, alpha, 0.0, 1);
        assert!((v - 0.2 * (std::f64::consts::TAU * alpha).cos()).abs() < 1e-15);
        // bounded by 2|λ|
        let sup = (0..10_000)
            .map(|n| almost_mathieu_potential(0.1, alpha, 0.37, n).abs())
            .fold(0.0_f64, f64::max);
        assert!(sup <= 0.2 + 1e-12);
    }

    #[test]
    fn golden_mean_is_diophantine_at_eta_02() {
        // liminf n·‖nα‖ = 1/√5 ≈ 0.447 for the golden mean, so η = 0.2,
        // τ = 1 holds on any finite range while η = 0.5 must fail.
        let p = DiophantineParams::new(0.2, 1.0, golden_mean()).unwrap();
        let rep = diophantine_check(&p, 100_000);
        assert!(rep.holds, "worst margin {} at n = {}", rep.worst_margin, rep.worst_n);

        let p = DiophantineParams::new(0.5, 1.0, golden_mean()).unwrap();
        let rep = diophantine_check(&p, 100_000);
        assert!(!rep.holds);
    }

    #[test]
    fn rational_alpha_fails_at_its_denominator() {
        let p = DiophantineParams::new(0.1, 1.0, 0.5).unwrap();
        let rep = diophantine_check(&p, 10);
        assert!(!rep.holds);
        assert_eq!(rep.worst_n, 2);
        assert_eq!(rep.worst_gap, 0.0);
    }

    #[test]
    fn perturbation_saturates_envelope() {
        let b = exp_decay_perturbation(1.0, 4.0, 5.0, 0.0, 0.0, 42, 24).unwrap();
        // |b(0)| = γ, |b(3)| = 4⁻¹⁵
        assert!((b.value(0).abs() - 1.0).abs() < 1e-15);
        assert!((b.value(3).abs() - 4.0_f64.powi(-15)).abs() < 1e-24);
        let env = crate::lattice::DecayEnvelope::new(1.0, 4.0, 5.0, 0.0).unwrap();
        env.admits(&b, 64).unwrap();
    }

    #[test]
    fn same_seed_reproduces_bit_for_bit() {
        let a = exp_decay_perturbation(1.0, 4.0, 5.0, 0.1, 2.0, 1234, 32).unwrap();
        let b = exp_decay_perturbation(1.0, 4.0, 5.0, 0.1, 2.0, 1234, 32).unwrap();
        assert_eq!(a, b);
        let c = exp_decay_perturbation(1.0, 4.0, 5.0, 0.1, 2.0, 1235, 32).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn splitmix_reference_values() {
        // Reference vector for the documented recurrence (state 0, 1, 2).
        assert_eq!(splitmix64(0), 0xE220A8397B1DCDAF);
        assert_eq!(splitmix64(1), 0x910A2DEC89025CC1);
        assert_eq!(splitmix64(2), 0x975835DE1C9756CE);
    }
}
