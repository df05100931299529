//! Asymptotic comparison of transfer matrices under decaying perturbations.
//!
//! Two expansions are implemented. The first writes the difference of the
//! unperturbed and perturbed transfer matrices as
//!
//! ```text
//! T(x,n,0) - T^κ(x,n,0) = T(x,n,0)·Q(x) + R_n(x)
//! ```
//!
//! where `Q` is a convergent series built from the telescoping formula and
//! `R_n` is an exponentially small tail (identically zero beyond the
//! support of a finite-rank perturbation). The second compares the
//! cumulative quadratic forms `P_k(E) = Σ_{n≤k} T*(E,2n-1,0)T(E,2n-1,0)`
//! of the two operators; their norm and determinant ratios stay confined,
//! which is what links transfer-matrix asymptotics to the regularity of
//! spectral measures through the `ψ`-bracket of the m-function.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::free::small_root;
use crate::lattice::{step_matrix, DecayEnvelope, PotentialSpec};
use crate::mat2::Mat2;

/// Truncation target for the expansion series tails.
const TAIL_TOL: f64 = 1e-12;

/// Telescoping decomposition of a product difference:
/// `Σ_k [Π_{j>k} F_j]·(F_k - G_k)·[Π_{j<k} G_j] = ΠF - ΠG`.
///
/// Lists are ordered `[M_0, M_1, ..., M_n]` and products apply leftward,
/// `Π = M_n ⋯ M_0`.
pub fn telescope_decompose(f: &[Mat2], g: &[Mat2]) -> Result<Mat2> {
    if f.len() != g.len() {
        return Err(Error::LengthMismatch { left: f.len(), right: g.len() });
    }
    if f.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let n = f.len();
    // suffix[k] = F_n ⋯ F_{k+1}, prefix[k] = G_{k-1} ⋯ G_0
    let mut suffix = vec![Mat2::IDENTITY; n];
    for k in (0..n - 1).rev() {
        suffix[k] = suffix[k + 1] * f[k + 1];
    }
    let mut prefix = Mat2::IDENTITY;
    let mut sum = Mat2::ZERO;
    for k in 0..n {
        sum = sum + suffix[k] * (f[k] - g[k]) * prefix;
        prefix = g[k] * prefix;
    }
    Ok(sum)
}

/// The two-sided expansion of `T - T^κ` at a fixed energy.
#[derive(Debug, Clone)]
pub struct PerturbationExpansion {
    pub energy: f64,
    pub kappa: f64,
    /// Series limit with `T - T^κ = T·Q + R_n`.
    pub q: Mat2,
    /// Dual limit with `T^κ - T = T^κ·P + K_n`.
    pub p: Mat2,
    /// `R_n` for `n = 0..=n_max`, each summed independently from the tail
    /// of the series (not recovered from the defining identity).
    pub r: Vec<Mat2>,
    /// `K_n` for the dual expansion.
    pub k: Vec<Mat2>,
    /// Unperturbed transfer matrices `T(x, n, 0)`, `n = 0..=n_max`.
    pub t_base: Vec<Mat2>,
    /// Perturbed transfer matrices `T^κ(x, n, 0)`.
    pub t_pert: Vec<Mat2>,
    /// Number of series terms actually summed.
    pub terms_used: usize,
    /// Analytic geometric bound on the neglected tail (0 when the
    /// perturbation has finite support fully covered by the sum).
    pub tail_bound: f64,
    pub envelope: DecayEnvelope,
}

impl PerturbationExpansion {
    pub fn r_norm(&self, n: usize) -> f64 {
        self.r[n].norm()
    }
    pub fn k_norm(&self, n: usize) -> f64 {
        self.k[n].norm()
    }
}

/// Expand `T - T^κ` at energy `x` up to site `n_max`.
///
/// Requires `|κ| ≤ 1/‖b‖∞` and `b` inside the envelope. The series for
/// `Q` is summed until its closed-form geometric tail falls below
/// `1e-12`, or exactly exhausted when `b` has finite support.
pub fn perturbation_expansion(
    x: f64,
    base: &PotentialSpec,
    b: &PotentialSpec,
    kappa: f64,
    envelope: &DecayEnvelope,
    n_max: usize,
) -> Result<PerturbationExpansion> {
    let sup_b = b.sup_norm();
    if sup_b > 0.0 && kappa.abs() > 1.0 / sup_b {
        return Err(Error::CouplingTooLarge { kappa, limit: 1.0 / sup_b });
    }
    let check_range = b
        .support_end()
        .unwrap_or(0)
        .max(n_max as i64)
        .max(64);
    envelope.admits(b, check_range)?;

    let support = b.support_end();
    let ratio = envelope.base().powf(2.0 - envelope.tau());
    let log_ratio = ratio.ln();

    let budget = match support {
        Some(end) => (end as usize).max(n_max),
        None => (4 * n_max).max(4096),
    };

    let mut t_base = Vec::with_capacity(n_max + 1);
    let mut t_pert = Vec::with_capacity(n_max + 1);
    t_base.push(Mat2::IDENTITY);
    t_pert.push(Mat2::IDENTITY);

    let mut prod_b = Mat2::IDENTITY;
    let mut prod_a = Mat2::IDENTITY;
    let mut q_terms: Vec<Mat2> = vec![Mat2::ZERO]; // k = 0 factor difference vanishes
    let mut p_terms: Vec<Mat2> = vec![Mat2::ZERO];
    let mut chat_log = f64::NEG_INFINITY;
    let tail_bound;
    let mut terms_used = 0usize;

    let mut site = 0i64;
    loop {
        site += 1;
        let k = site as usize;
        let vb = base.value(site);
        let delta = kappa * b.value(site);
        let prev_a = prod_a;
        let prev_b = prod_b;
        prod_b = step_matrix(x, vb) * prod_b;
        prod_a = step_matrix(x, vb + delta) * prod_a;
        if !prod_b.is_finite() || !prod_a.is_finite() {
            return Err(Error::Overflow { site });
        }
        if k <= n_max {
            t_base.push(prod_b);
            t_pert.push(prod_a);
        }

        if delta != 0.0 {
            let diff = Mat2::new(delta, 0.0, 0.0, 0.0);
            let qk = prod_b.inverse_unimodular() * diff * prev_a;
            let pk = prod_a.inverse_unimodular() * (-diff) * prev_b;
            q_terms.push(qk);
            p_terms.push(pk);
            terms_used = k;
            let norm = qk.norm().max(pk.norm());
            if norm > 0.0 {
                chat_log = chat_log.max(norm.ln() - k as f64 * log_ratio);
            }
        } else {
            q_terms.push(Mat2::ZERO);
            p_terms.push(Mat2::ZERO);
        }

        let exhausted = match support {
            Some(end) => site >= end && k >= n_max,
            None => false,
        };
        if exhausted {
            tail_bound = 0.0;
            break;
        }
        if k >= n_max {
            let bound = (chat_log + (k + 1) as f64 * log_ratio).exp() / (1.0 - ratio);
            if bound < TAIL_TOL {
                tail_bound = bound;
                break;
            }
            if k >= budget {
                return Err(Error::Unconverged { bound, target: TAIL_TOL, terms: k });
            }
        }
    }

    let total = q_terms.len();
    // suffix sums Σ_{j ≥ k} q_j, descending so finite-rank tails are exact zeros
    let mut suffix_q = vec![Mat2::ZERO; total + 1];
    let mut suffix_p = vec![Mat2::ZERO; total + 1];
    for k in (0..total).rev() {
        suffix_q[k] = q_terms[k] + suffix_q[k + 1];
        suffix_p[k] = p_terms[k] + suffix_p[k + 1];
    }

    let q = suffix_q[0];
    let p = suffix_p[0];
    let r: Vec<Mat2> = (0..=n_max)
        .map(|n| -(t_base[n] * suffix_q[(n + 1).min(total)]))
        .collect();
    let kmats: Vec<Mat2> = (0..=n_max)
        .map(|n| -(t_pert[n] * suffix_p[(n + 1).min(total)]))
        .collect();

    Ok(PerturbationExpansion {
        energy: x,
        kappa,
        q,
        p,
        r,
        k: kmats,
        t_base,
        t_pert,
        terms_used,
        tail_bound,
        envelope: *envelope,
    })
}

/// Norm comparison `‖T‖ vs ‖T^κ‖` at one site, with the locally fitted
/// bracket constant and the residual scale `r_n = ‖R_n‖`.
#[derive(Debug, Clone, Copy)]
pub struct NormSandwich {
    pub t_norm: f64,
    pub t_kappa_norm: f64,
    /// `‖T^κ‖ / ‖T‖`.
    pub ratio: f64,
    /// `max(ratio, 1/ratio)`, the smallest constant closing the bracket here.
    pub gamma_hat: f64,
    pub lower: f64,
    pub upper: f64,
    pub r_n: f64,
}

pub fn norm_sandwich(
    x: f64,
    base: &PotentialSpec,
    b: &PotentialSpec,
    kappa: f64,
    envelope: &DecayEnvelope,
    n: usize,
) -> Result<NormSandwich> {
    let exp = perturbation_expansion(x, base, b, kappa, envelope, n)?;
    let t_norm = exp.t_base[n].norm();
    let t_kappa_norm = exp.t_pert[n].norm();
    let ratio = t_kappa_norm / t_norm;
    let gamma_hat = ratio.max(1.0 / ratio);
    Ok(NormSandwich {
        t_norm,
        t_kappa_norm,
        ratio,
        gamma_hat,
        lower: t_norm / gamma_hat,
        upper: t_norm * gamma_hat,
        r_n: exp.r[n].norm(),
    })
}

/// One entry of the cumulative family `P_k(E)`.
#[derive(Debug, Clone, Copy)]
pub struct PkEntry {
    pub k: usize,
    pub matrix: Mat2,
    pub det: f64,
    pub norm: f64,
    /// Probing scale `ε_k = 1/√(4 det P_k)`.
    pub eps: f64,
}

/// The family `P_k(E) = Σ_{n=1}^k T*(E, 2n-1, 0) T(E, 2n-1, 0)`.
#[derive(Debug, Clone)]
pub struct PkFamily {
    pub energy: f64,
    pub entries: Vec<PkEntry>,
}

pub fn pk_family(x: f64, spec: &PotentialSpec, k_max: usize) -> Result<PkFamily> {
    if k_max < 1 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let mut entries = Vec::with_capacity(k_max);
    let mut t = Mat2::IDENTITY;
    let mut site = 0i64;
    let mut p = Mat2::ZERO;
    for k in 1..=k_max {
        let target = 2 * k as i64 - 1;
        while site < target {
            site += 1;
            t = step_matrix(x, spec.value(site)) * t;
        }
        p = p + t.gram();
        if !p.is_finite() {
            return Err(Error::Overflow { site });
        }
        let det = p.det();
        entries.push(PkEntry {
            k,
            matrix: p,
            det,
            norm: p.norm(),
            eps: 1.0 / (4.0 * det).sqrt(),
        });
    }
    Ok(PkFamily { energy: x, entries })
}

/// Norm and determinant ratios of the perturbed vs unperturbed `P_k`.
#[derive(Debug, Clone, Copy)]
pub struct PkRatio {
    pub k: usize,
    pub norm_ratio: f64,
    pub det_ratio: f64,
}

pub fn pk_comparison(
    x: f64,
    base: &PotentialSpec,
    b: &PotentialSpec,
    kappa: f64,
    envelope: &DecayEnvelope,
    k_max: usize,
) -> Result<Vec<PkRatio>> {
    let sup_b = b.sup_norm();
    if sup_b > 0.0 && kappa.abs() > 1.0 / sup_b {
        return Err(Error::CouplingTooLarge { kappa, limit: 1.0 / sup_b });
    }
    envelope.admits(b, b.support_end().unwrap_or(0).max(2 * k_max as i64))?;
    let plain = pk_family(x, base, k_max)?;
    let perturbed_spec = PotentialSpec::perturbed(base.clone(), kappa, b.clone());
    let perturbed = pk_family(x, &perturbed_spec, k_max)?;
    Ok(plain
        .entries
        .iter()
        .zip(perturbed.entries.iter())
        .map(|(u, v)| PkRatio {
            k: u.k,
            norm_ratio: v.norm / u.norm,
            det_ratio: v.det / u.det,
        })
        .collect())
}

/// Möbius action of the rotation by `angle` on the upper half-plane:
/// `[[cos a, -sin a], [sin a, cos a]] · z`.
pub fn rotation_action(angle: f64, z: Complex64) -> Complex64 {
    let (s, c) = angle.sin_cos();
    (z * c - s) / (z * s + c)
}

/// m-function for the boundary condition `β`, obtained from the Dirichlet
/// m-function by the rotation `m_β = R_{-β/2π}·m⁺` (rotation angle `-β`).
pub fn m_beta(m_plus: Complex64, beta: f64) -> Complex64 {
    rotation_action(-beta, m_plus)
}

/// `ψ(z) = sup over rotations of |R·z|`, by dense grid plus golden-section
/// refinement (1024 grid points, 40 refinement steps; the Möbius action
/// has period π in the angle and is smooth, so the refined angle is
/// accurate to better than 1e-8).
pub fn psi_sup(z: Complex64) -> Result<f64> {
    if !(z.im > 0.0) {
        return Err(Error::NotInUpperHalfPlane(z.im));
    }
    const GRID: usize = 1024;
    let h = std::f64::consts::PI / GRID as f64;
    let value = |t: f64| rotation_action(t, z).norm();
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..GRID {
        let v = value(i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    // golden-section maximization on the bracketing interval
    let mut lo = (best_i as f64 - 1.0) * h;
    let mut hi = (best_i as f64 + 1.0) * h;
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = value(x1);
    let mut f2 = value(x2);
    for _ in 0..40 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = value(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = value(x1);
        }
    }
    Ok(best.max(f1).max(f2))
}

/// Dirichlet half-line m-function for potentials vanishing beyond a finite
/// site, by the exact Riccati recursion `m ← 1/(V(n) - z - m)` seeded with
/// the free m-function. Quasi-periodic potentials are not representable
/// here and are rejected.
pub fn m_plus_oracle(spec: &PotentialSpec, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::NotInUpperHalfPlane(z.im));
    }
    let end = spec
        .support_end()
        .ok_or(Error::UnsupportedSpec("potential does not vanish beyond a finite site"))?;
    let mut m = -small_root(z);
    for n in (1..=end).rev() {
        m = (Complex64::new(spec.value(n), 0.0) - z - m).finv();
    }
    Ok(m)
}

/// One evaluation of the bracket `ψ(m⁺(E + iε_k)) / (‖P_k(E)‖ ε_k)`.
#[derive(Debug, Clone, Copy)]
pub struct JlBracket {
    pub ratio: f64,
    pub psi: f64,
    pub eps_k: f64,
    pub pk_norm: f64,
}

pub fn jl_bracket(x: f64, spec: &PotentialSpec, k: usize) -> Result<JlBracket> {
    let family = pk_family(x, spec, k)?;
    let entry = family.entries.last().expect("k >= 1 enforces nonempty family");
    let m = m_plus_oracle(spec, Complex64::new(x, entry.eps))?;
    let psi = psi_sup(m)?;
    Ok(JlBracket {
        ratio: psi / (entry.norm * entry.eps),
        psi,
        eps_k: entry.eps,
        pk_norm: entry.norm,
    })
}

/// Cesàro mean of `‖T‖²` and the inverse-square sum, the quantities whose
/// boundedness and divergence flag the essential support of the
/// absolutely continuous spectrum.
#[derive(Debug, Clone, Copy)]
pub struct LastSimonDiagnostics {
    pub cesaro: f64,
    pub inv_square_sum: f64,
}

pub fn last_simon_diagnostics(
    x: f64,
    spec: &PotentialSpec,
    l: usize,
) -> Result<LastSimonDiagnostics> {
    if l < 1 {
        return Err(Error::InvalidParameter("L must be at least 1".into()));
    }
    let mut t = Mat2::IDENTITY;
    let mut sum_sq = 0.0;
    let mut sum_inv = 0.0;
    for n in 1..=l as i64 {
        t = step_matrix(x, spec.value(n)) * t;
        let nsq = t.norm_sq();
        if !nsq.is_finite() {
            return Err(Error::Overflow { site: n });
        }
        sum_sq += nsq;
        sum_inv += 1.0 / nsq;
    }
    if !sum_sq.is_finite() {
        return Err(Error::Overflow { site: l as i64 });
    }
    Ok(LastSimonDiagnostics {
        cesaro: sum_sq / l as f64,
        inv_square_sum: sum_inv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::free_m_function;
    use crate::lattice::transfer;
    use crate::quasiperiodic::{exp_decay_perturbation, splitmix64};

    fn rand_unit(seed: u64) -> f64 {
        (splitmix64(seed) >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn rand_mat(seed: u64) -> Mat2 {
        Mat2::new(
            rand_unit(seed),
            rand_unit(seed ^ 0x1111),
            rand_unit(seed ^ 0x2222),
            rand_unit(seed ^ 0x3333),
        )
    }

    fn product(ms: &[Mat2]) -> Mat2 {
        ms.iter().fold(Mat2::IDENTITY, |acc, m| *m * acc)
    }

    #[test]
    fn telescope_vanishes_when_equal() {
        let f: Vec<Mat2> = (0..6).map(|i| rand_mat(100 + i)).collect();
        let s = telescope_decompose(&f, &f).unwrap();
        assert_eq!(s, Mat2::ZERO);
    }

    #[test]
    fn telescope_two_factor_case() {
        // F₁F₀ - G₁G₀ = F₁(F₀-G₀) + (F₁-G₁)G₀
        let f = [rand_mat(1), rand_mat(2)];
        let g = [rand_mat(3), rand_mat(4)];
        let lhs = f[1] * f[0] - g[1] * g[0];
        let rhs = f[1] * (f[0] - g[0]) + (f[1] - g[1]) * g[0];
        let tele = telescope_decompose(&f, &g).unwrap();
        assert!((lhs - tele).norm() < 1e-14);
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn telescope_matches_product_difference() {
        for len in [1usize, 3, 8, 17, 32] {
            let f: Vec<Mat2> = (0..len).map(|i| rand_mat(7 * len as u64 + i as u64)).collect();
            let g: Vec<Mat2> = (0..len).map(|i| rand_mat(91 * len as u64 + i as u64)).collect();
            let direct = product(&f) - product(&g);
            let tele = telescope_decompose(&f, &g).unwrap();
            let scale = product(&f).norm() + product(&g).norm();
            assert!(
                (direct - tele).norm() <= 1e-13 * scale.max(1.0),
                "len = {len}"
            );
        }
        assert!(telescope_decompose(&[Mat2::IDENTITY], &[]).is_err());
    }

    fn test_envelope() -> DecayEnvelope {
        DecayEnvelope::new(1.0, 4.0, 5.0, 0.0).unwrap()
    }

    #[test]
    fn expansion_vanishes_at_zero_coupling() {
        let b = exp_decay_perturbation(1.0, 4.0, 5.0, 0.0, 0.0, 3, 32).unwrap();
        let exp =
            perturbation_expansion(0.7, &PotentialSpec::Zero, &b, 0.0, &test_envelope(), 20)
                .unwrap();
        assert_eq!(exp.q, Mat2::ZERO);
        assert_eq!(exp.p, Mat2::ZERO);
        for n in 0..=20 {
            assert_eq!(exp.r[n], Mat2::ZERO);
            assert_eq!(exp.k[n], Mat2::ZERO);
        }
        assert_eq!(exp.tail_bound, 0.0);
    }

    /// Envelope with a constant large enough to admit O(1) finite-rank
    /// perturbations on short supports.
    fn loose_envelope() -> DecayEnvelope {
        DecayEnvelope::new(1e16, 4.0, 5.0, 0.0).unwrap()
    }

    #[test]
    fn single_site_q_is_exact() {
        // base = 0, x = 0, b = δ at site 1: Q = B₁⁻¹·diag(κ,0) = [[0,0],[-κ,0]].
        let b = PotentialSpec::sampled(vec![1.0], 1);
        let kappa = 0.3;
        let exp =
            perturbation_expansion(0.0, &PotentialSpec::Zero, &b, kappa, &loose_envelope(), 8)
                .unwrap();
        assert_eq!(exp.q, Mat2::new(0.0, 0.0, -kappa, 0.0));
    }

    #[test]
    fn finite_rank_tail_is_exactly_zero() {
        // support in [1, 5]: R_n = 0 entrywise for n ≥ 5.
        let b = PotentialSpec::sampled(vec![0.8, -0.5, 0.3, -0.2, 0.1], 1);
        let exp =
            perturbation_expansion(0.9, &PotentialSpec::Zero, &b, 0.4, &loose_envelope(), 12)
                .unwrap();
        for n in 6..=12 {
            assert_eq!(exp.r[n], Mat2::ZERO, "n = {n}");
            assert_eq!(exp.k[n], Mat2::ZERO, "n = {n}");
        }
        assert!(exp.r[2] != Mat2::ZERO);
    }

    #[test]
    fn expansion_identity_holds() {
        // T - T^κ - T·Q - R_n = 0 within rounding, R_n from the tail series.
        let b = exp_decay_perturbation(1.0, 4.0, 5.0, 0.0, 0.0, 11, 48).unwrap();
        let base = PotentialSpec::Zero;
        let kappa = 0.05;
        for &x in &[-1.7, -0.4, 0.5, 1.3] {
            let exp = perturbation_expansion(x, &base, &b, kappa, &test_envelope(), 60).unwrap();
            for n in [0usize, 3, 17, 40, 60] {
                let lhs = exp.t_base[n] - exp.t_pert[n] - exp.t_base[n] * exp.q - exp.r[n];
                assert!(lhs.norm() < 1e-10, "x = {x}, n = {n}: {}", lhs.norm());
                let dual = exp.t_pert[n] - exp.t_base[n] - exp.t_pert[n] * exp.p - exp.k[n];
                assert!(dual.norm() < 1e-10, "dual x = {x}, n = {n}");
            }
        }
    }

    #[test]
    fn expansion_rejects_bad_inputs() {
        let b = PotentialSpec::sampled(vec![2.0], 1);
        // κ beyond 1/‖b‖∞
        assert!(matches!(
            perturbation_expansion(0.0, &PotentialSpec::Zero, &b, 0.6, &test_envelope(), 4),
            Err(Error::CouplingTooLarge { .. })
        ));
        // envelope violated: |b(1)| = 2 > 4⁻⁵
        assert!(matches!(
            perturbation_expansion(0.0, &PotentialSpec::Zero, &b, 0.1, &test_envelope(), 4),
            Err(Error::EnvelopeViolation { .. })
        ));
    }

    #[test]
    fn sandwich_trivial_at_zero_coupling() {
        let b = exp_decay_perturbation(1.0, 4.0, 5.0, 0.0, 0.0, 5, 32).unwrap();
        let s = norm_sandwich(0.5, &PotentialSpec::Zero, &b, 0.0, &test_envelope(), 100).unwrap();
        assert_eq!(s.ratio, 1.0);
        assert_eq!(s.lower, s.upper);
        assert_eq!(s.r_n, 0.0);
    }

    #[test]
    fn residual_scale_decays_against_growth() {
        let b = exp_decay_perturbation(1.0, 4.0, 5.0, 0.0, 0.0, 5, 64).unwrap();
        let env = test_envelope();
        let mut prev = f64::INFINITY;
        for &n in &[8usize, 16, 24, 32] {
            let s = norm_sandwich(0.5, &PotentialSpec::Zero, &b, 0.05, &env, n).unwrap();
            let rel = s.r_n / s.t_norm;
            assert!(rel <= prev);
            prev = rel;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn pk_free_zero_energy_closed_form() {
        // A(0) orthogonal ⇒ each summand is I ⇒ P_k = k·I.
        let fam = pk_family(0.0, &PotentialSpec::Zero, 10).unwrap();
        for e in &fam.entries {
            let k = e.k as f64;
            assert!((e.matrix - Mat2::IDENTITY.scale(k)).norm() < 1e-12);
            assert!((e.det - k * k).abs() < 1e-9);
            assert!((e.norm - k * 2.0_f64.sqrt()).abs() < 1e-10);
            assert!((e.eps - 1.0 / (2.0 * k)).abs() < 1e-12);
        }
    }

    #[test]
    fn pk_first_entry_is_unimodular() {
        let spec = crate::quasiperiodic::almost_mathieu_spec(0.1, crate::quasiperiodic::golden_mean(), 0.0);
        let fam = pk_family(1.3, &spec, 1).unwrap();
        assert!((fam.entries[0].det - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pk_monotone_in_the_positive_order() {
        let fam = pk_family(1.0, &PotentialSpec::Zero, 100).unwrap();
        for w in fam.entries.windows(2) {
            let diff = w[1].matrix - w[0].matrix;
            assert!(diff.min_eigenvalue_symmetric() >= -1e-12);
            assert!(w[1].det >= w[0].det - 1e-12);
            assert!(w[1].norm >= w[0].norm - 1e-12);
        }
        assert!(fam.entries.last().unwrap().det > fam.entries[0].det * 100.0);
    }

    #[test]
    fn eps_scale_contracts_slowly() {
        // ε_{k+1} > c·ε_k with a per-run positive c.
        let fam = pk_family(0.7, &PotentialSpec::Zero, 200).unwrap();
        let mut c: f64 = 1.0;
        for w in fam.entries.windows(2) {
            c = c.min(w[1].eps / w[0].eps);
        }
        assert!(c > 0.25, "c = {c}");
    }

    #[test]
    fn pk_comparison_trivial_and_confined() {
        let b = exp_decay_perturbation(1.0, 4.0, 5.0, 0.0, 0.0, 9, 48).unwrap();
        let env = test_envelope();
        let ratios = pk_comparison(0.5, &PotentialSpec::Zero, &b, 0.0, &env, 32).unwrap();
        for r in &ratios {
            assert_eq!(r.norm_ratio, 1.0);
            assert_eq!(r.det_ratio, 1.0);
        }
        let ratios = pk_comparison(0.5, &PotentialSpec::Zero, &b, 0.05, &env, 200).unwrap();
        for r in &ratios {
            assert!(r.norm_ratio > 0.5 && r.norm_ratio < 2.0, "k = {}", r.k);
            assert!(r.det_ratio > 0.5 && r.det_ratio < 2.0, "k = {}", r.k);
        }
    }

    /// Closed-form oracle for ψ: the rotation orbit of `z` is the
    /// hyperbolic circle about `i` through `z`, whose maximal modulus is
    /// `e^d` with `cosh d = (1 + |z|²)/(2 Im z)`.
    fn psi_oracle(z: Complex64) -> f64 {
        let cosh_d = (1.0 + z.norm_sqr()) / (2.0 * z.im);
        cosh_d + (cosh_d * cosh_d - 1.0).sqrt()
    }

    #[test]
    fn psi_fixes_i() {
        let v = psi_sup(Complex64::new(0.0, 1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn psi_sandwich_and_oracle() {
        let samples = [
            Complex64::new(0.0, 2.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(-0.3, 0.08),
            Complex64::new(2.5, 0.6),
            Complex64::new(-1.9, 3.4),
        ];
        for &z in &samples {
            let psi = psi_sup(z).unwrap();
            // ψ(z)⁻¹ ≤ Im z ≤ |z| ≤ ψ(z)
            assert!(1.0 / psi <= z.im + 1e-12);
            assert!(z.im <= z.norm() + 1e-15);
            assert!(z.norm() <= psi + 1e-12);
            let oracle = psi_oracle(z);
            assert!((psi / oracle - 1.0).abs() < 1e-7, "z = {z}: {psi} vs {oracle}");
        }
        assert!(psi_sup(Complex64::new(1.0, -0.1)).is_err());
    }

    #[test]
    fn rotation_convention_matches_free_closed_form() {
        // m_β = R_{-β/2π}·m⁺ differs from the Green function G_β by the
        // exact affine correction m_β = tan β + G_β/cos²β; checking the
        // identity at random points pins the rotation convention.
        for i in 0..16 {
            let re = rand_unit(500 + i) * 2.5;
            let im = rand_unit(900 + i) * 0.5 + 0.6;
            let beta = rand_unit(1300 + i) * 1.2;
            let z = Complex64::new(re, im);
            let m_plus = free_m_function(z, 0.0).unwrap();
            let rotated = m_beta(m_plus, beta);
            let g_beta = free_m_function(z, beta).unwrap();
            let expected = g_beta / (beta.cos() * beta.cos()) + beta.tan();
            assert!(
                (rotated - expected).norm() < 1e-10,
                "z = {z}, beta = {beta}"
            );
        }
    }

    #[test]
    fn m_plus_oracle_free_and_finite_rank() {
        let z = Complex64::new(0.3, 0.05);
        let free = m_plus_oracle(&PotentialSpec::Zero, z).unwrap();
        assert!((free - free_m_function(z, 0.0).unwrap()).norm() < 1e-14);

        let spec = PotentialSpec::sampled(vec![0.4, -0.2], 1);
        let m = m_plus_oracle(&spec, z).unwrap();
        assert!(m.im > 0.0);

        let am = crate::quasiperiodic::almost_mathieu_spec(0.1, crate::quasiperiodic::golden_mean(), 0.0);
        assert!(matches!(m_plus_oracle(&am, z), Err(Error::UnsupportedSpec(_))));
    }

    #[test]
    fn jl_bracket_free_values() {
        let b = jl_bracket(0.0, &PotentialSpec::Zero, 10).unwrap();
        assert!((b.eps_k - 0.05).abs() < 1e-10);
        assert!((b.pk_norm - 10.0 * 2.0_f64.sqrt()).abs() < 1e-9);
        assert!(b.ratio.is_finite() && b.ratio > 0.0);

        // κ = 0 perturbation leaves the bracket untouched
        let trivially_perturbed = PotentialSpec::perturbed(
            PotentialSpec::Zero,
            0.0,
            PotentialSpec::sampled(vec![1.0], 1),
        );
        let b2 = jl_bracket(0.0, &trivially_perturbed, 10).unwrap();
        assert_eq!(b.ratio, b2.ratio);
    }

    #[test]
    fn last_simon_free_band_center() {
        for l in [1usize, 10, 137] {
            let d = last_simon_diagnostics(0.0, &PotentialSpec::Zero, l).unwrap();
            assert_eq!(d.cesaro, 2.0);
            assert!((d.inv_square_sum - l as f64 / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn last_simon_outside_spectrum_grows() {
        let d50 = last_simon_diagnostics(3.0, &PotentialSpec::Zero, 50).unwrap();
        let d100 = last_simon_diagnostics(3.0, &PotentialSpec::Zero, 100).unwrap();
        // hyperbolic step matrix: Cesàro mean grows exponentially
        assert!(d100.cesaro > d50.cesaro * 1e10);
    }

    #[test]
    fn transfer_and_expansion_agree_on_prefixes() {
        let b = exp_decay_perturbation(1.0, 4.0, 5.0, 0.0, 0.0, 21, 32).unwrap();
        let exp =
            perturbation_expansion(1.1, &PotentialSpec::Zero, &b, 0.05, &test_envelope(), 16)
                .unwrap();
        let spec = PotentialSpec::perturbed(PotentialSpec::Zero, 0.05, b);
        for n in [0i64, 5, 16] {
            assert_eq!(exp.t_pert[n as usize], transfer(1.1, &spec, n).unwrap());
        }
    }
}
