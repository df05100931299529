//! Spectral-measure approximation and regularity scans.
//!
//! The half-line spectral measure is approximated through the weak limit
//! of `(1/π)‖T(x, n, 0)u_β‖⁻² dx`. At finite `n` that integrand
//! oscillates around the limiting density, so only integrals converge; the
//! quadrature builders here sample the integrand densely enough to average
//! the oscillation out and return a [`QuadratureMeasure`] — a finite list
//! of (node, weight) atoms that every downstream computation (interval
//! masses, Hölder moduli, Fourier transforms, return probabilities)
//! consumes.
//!
//! A normalization note: with the vector convention `u_β = (cos β, -sin β)`
//! the raw approximant converges to `ρ_β/cos²β`, i.e. the spectral measure
//! of the solution normalization. The builders multiply by `cos²β` so the
//! result approximates the spectral measure of `δ₁`, whose density is the
//! closed form `ρ_β`.

use std::f64::consts::PI;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{free_power_apply, transfer_apply, BoundaryCondition, PotentialSpec};

/// Finite list of (node, weight) pairs representing a positive measure.
///
/// Nodes are strictly increasing and weights nonnegative; the total mass
/// is the fixed-order sum of the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureMeasure {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    total_mass: f64,
}

impl QuadratureMeasure {
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if nodes.len() != weights.len() {
            return Err(Error::LengthMismatch { left: nodes.len(), right: weights.len() });
        }
        for w in nodes.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(format!(
                    "nodes must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "weight {w} at index {i} is not a finite nonnegative number"
                )));
            }
        }
        let total_mass = weights.iter().sum();
        Ok(QuadratureMeasure { nodes, weights, total_mass })
    }

    /// Single unit atom, mostly useful in tests.
    pub fn atom(x: f64, weight: f64) -> Self {
        QuadratureMeasure { nodes: vec![x], weights: vec![weight], total_mass: weight }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Mass of `[left, right)`.
    pub fn interval_mass(&self, left: f64, right: f64) -> f64 {
        debug_assert!(left < right);
        let lo = self.nodes.partition_point(|&x| x < left);
        let hi = self.nodes.partition_point(|&x| x < right);
        self.weights[lo..hi].iter().sum()
    }

    /// Integral `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_parts(self.nodes.clone(), self.weights.iter().map(|w| w * c).collect())
    }

    /// Pointwise sum of two measures; coinciding nodes merge their weights.
    pub fn merge_add(&self, other: &Self) -> Result<Self> {
        let mut nodes = Vec::with_capacity(self.len() + other.len());
        let mut weights = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let take_self = match (self.nodes.get(i), other.nodes.get(j)) {
                (Some(&a), Some(&b)) => {
                    if a == b {
                        nodes.push(a);
                        weights.push(self.weights[i] + other.weights[j]);
                        i += 1;
                        j += 1;
                        continue;
                    }
                    a < b
                }
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => unreachable!(),
            };
            if take_self {
                nodes.push(self.nodes[i]);
                weights.push(self.weights[i]);
                i += 1;
            } else {
                nodes.push(other.nodes[j]);
                weights.push(other.weights[j]);
                j += 1;
            }
        }
        Self::from_parts(nodes, weights)
    }

    /// Serialize as two-column CSV with `#` header comments.
    pub fn write_csv(&self, out: &mut impl Write, meta: &MeasureMeta) -> io::Result<()> {
        writeln!(out, "# spectral-lab measure v1")?;
        writeln!(out, "# window = {} {}", meta.window.0, meta.window.1)?;
        writeln!(out, "# carmona_n = {}", meta.carmona_n)?;
        writeln!(out, "# beta = {}", meta.beta)?;
        writeln!(out, "# spec = {:016x}", meta.spec_digest)?;
        writeln!(out, "# total_mass = {}", self.total_mass)?;
        writeln!(out, "node,weight")?;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            writeln!(out, "{x},{w}")?;
        }
        Ok(())
    }

    /// Read back a two-column CSV produced by [`Self::write_csv`].
    pub fn read_csv(input: impl BufRead) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for line in input.lines() {
            let line = line.map_err(|e| Error::InvalidParameter(format!("csv read: {e}")))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("node") {
                continue;
            }
            let mut fields = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::InvalidParameter(format!("bad csv row: {line}")))?
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad csv number in: {line}")))
            };
            nodes.push(parse(fields.next())?);
            weights.push(parse(fields.next())?);
        }
        Self::from_parts(nodes, weights)
    }
}

/// Header fields stamped into measure CSV files.
#[derive(Debug, Clone, Copy)]
pub struct MeasureMeta {
    pub window: (f64, f64),
    pub carmona_n: usize,
    pub beta: f64,
    pub spec_digest: u64,
}

/// `‖T(x, n, 0)·u‖²`, taking the O(1) free-power shortcut once the
/// potential's support is exhausted.
pub fn transfer_vector_norm_sq(
    x: f64,
    spec: &PotentialSpec,
    u: [f64; 2],
    n: i64,
) -> Result<f64> {
    let w = match spec.support_end() {
        Some(end) if n > end && x.abs() < 2.0 => {
            let w0 = transfer_apply(x, spec, end, u)?;
            free_power_apply(x, n - end, w0)?
        }
        _ => transfer_apply(x, spec, n, u)?,
    };
    Ok(w[0] * w[0] + w[1] * w[1])
}

/// Carmona approximant `(1/π)·‖T(x, n, 0)u_β‖⁻²`.
///
/// Pointwise values oscillate in `n`; only integrals against test
/// functions converge. See the module docs for the `cos²β` normalization
/// applied when a full measure is built.
pub fn carmona_density(
    x: f64,
    spec: &PotentialSpec,
    bc: &BoundaryCondition,
    n: usize,
) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParameter("carmona approximant needs n >= 1".into()));
    }
    let nsq = transfer_vector_norm_sq(x, spec, bc.vector(), n as i64)?;
    Ok(1.0 / (PI * nsq))
}

/// Quadrature rule used by [`build_measure`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridRule {
    /// Midpoint rule in `θ` under `x = 2cos θ`; turns the square-root edge
    /// behavior into a smooth integrand. The default.
    UniformTheta { nodes: usize },
    /// Midpoint rule directly in `x`; uniform node spacing enables the
    /// autocorrelation fast path for time averages.
    UniformX { nodes: usize },
    /// Fine `θ` sampling (refined near the band edges, where the finite-n
    /// integrand degenerates into narrow peaks) aggregated into `cells`
    /// uniform x-cells aligned with the dyadic grid of `[-2, 2]`.
    /// Interval masses at dyadic depths up to `log2(cells)` are then free
    /// of cell-straddling error. `cells` must be a power of two.
    DyadicCells { cells: usize },
}

/// Build a quadrature approximation of the spectral measure on `window`.
///
/// Weights are `cos²β · (1/π)‖T(x,n,0)u_β‖⁻² · (cell length)`; see the
/// module docs for why the `cos²β` factor is there. Windows touching
/// `|x| = 2` are rejected: the construction is only meaningful strictly
/// inside the band, and reports should state their window.
pub fn build_measure(
    spec: &PotentialSpec,
    bc: &BoundaryCondition,
    n: usize,
    window: (f64, f64),
    grid: GridRule,
) -> Result<QuadratureMeasure> {
    let (left, right) = window;
    if !(left < right) {
        return Err(Error::InvalidParameter(format!("window [{left}, {right}] is empty")));
    }
    if !(left > -2.0 && right < 2.0) {
        return Err(Error::WindowTouchesEdge { left, right });
    }
    if n < 1 {
        return Err(Error::InvalidParameter("carmona approximant needs n >= 1".into()));
    }
    // Flatten finite-support potentials into an array once; the builders
    // below evaluate the potential millions of times.
    let flattened = spec.support_end().map(|end| {
        PotentialSpec::sampled((1..=end).map(|j| spec.value(j)).collect(), 1)
    });
    let spec = flattened.as_ref().unwrap_or(spec);
    let cos2 = bc.beta().cos().powi(2);
    let u = bc.vector();
    let density = |x: f64| -> Result<f64> {
        Ok(cos2 / (PI * transfer_vector_norm_sq(x, spec, u, n as i64)?))
    };

    match grid {
        GridRule::UniformTheta { nodes } => {
            if nodes == 0 {
                return Err(Error::EmptyGrid);
            }
            let theta_lo = (right / 2.0).acos();
            let theta_hi = (left / 2.0).acos();
            let h = (theta_hi - theta_lo) / nodes as f64;
            // θ ascending means x descending; build back-to-front.
            let pairs: Vec<Result<(f64, f64)>> = (0..nodes)
                .into_par_iter()
                .map(|j| {
                    let theta = theta_lo + (j as f64 + 0.5) * h;
                    let x = 2.0 * theta.cos();
                    let w = density(x)? * 2.0 * theta.sin() * h;
                    Ok((x, w))
                })
                .collect();
            let mut xs = Vec::with_capacity(nodes);
            let mut ws = Vec::with_capacity(nodes);
            for p in pairs.into_iter().rev() {
                let (x, w) = p?;
                xs.push(x);
                ws.push(w);
            }
            QuadratureMeasure::from_parts(xs, ws)
        }
        GridRule::UniformX { nodes } => {
            if nodes == 0 {
                return Err(Error::EmptyGrid);
            }
            let h = (right - left) / nodes as f64;
            let pairs: Vec<Result<(f64, f64)>> = (0..nodes)
                .into_par_iter()
                .map(|j| {
                    let x = left + (j as f64 + 0.5) * h;
                    Ok((x, density(x)? * h))
                })
                .collect();
            let mut xs = Vec::with_capacity(nodes);
            let mut ws = Vec::with_capacity(nodes);
            for p in pairs {
                let (x, w) = p?;
                xs.push(x);
                ws.push(w);
            }
            QuadratureMeasure::from_parts(xs, ws)
        }
        GridRule::DyadicCells { cells } => {
            if cells == 0 {
                return Err(Error::EmptyGrid);
            }
            if !cells.is_power_of_two() {
                return Err(Error::InvalidParameter(format!(
                    "cells = {cells} must be a power of two for dyadic alignment"
                )));
            }
            // The finite-n integrand develops unbounded peaks only at an
            // edge where 1 + sin(2β)·cos θ degenerates: x = -2 for β near
            // π/4, x = +2 near -π/4. Elsewhere peaks stay O(1) and the
            // bulk oscillation cap is enough.
            let s2b = (2.0 * bc.beta()).sin();
            let refine = EdgeRefine { left_edge: s2b > 0.5, right_edge: s2b < -0.5 };
            build_dyadic_cells(&density, n, window, cells, refine)
        }
    }
}

/// Fine θ march with pole-aware step control, aggregated into x-cells.
///
/// The finite-n integrand is `ρ(x)/(1 - c(θ)cos(Nθ))`-shaped with
/// `N = 2n+1`; near the band edges (`|c| → 1`) its oscillation degenerates
/// into peaks of θ-width ≈ `s/N` where `s` is the distance to the edge.
/// The step is a quarter of the local peak width (capped at a sixteenth
/// of the bulk oscillation period), so cell masses average the
/// oscillation instead of point-sampling it. Each fine interval is
/// integrated with two Gauss points; intervals are split at cell
/// boundaries so no mass is ever assigned across a dyadic edge.
/// Which band edges need pole-resolved sampling.
#[derive(Debug, Clone, Copy)]
struct EdgeRefine {
    /// x = -2, i.e. θ → π.
    left_edge: bool,
    /// x = +2, i.e. θ → 0.
    right_edge: bool,
}

fn build_dyadic_cells(
    density: &(impl Fn(f64) -> Result<f64> + Sync),
    n: usize,
    window: (f64, f64),
    cells: usize,
    refine: EdgeRefine,
) -> Result<QuadratureMeasure> {
    let (left, right) = window;
    let cell_w = 4.0 / cells as f64;
    let theta_lo = (right / 2.0).acos();
    let theta_hi = (left / 2.0).acos();
    let big_n = (2 * n + 1) as f64;

    // 1) march: fine intervals [θ, θ+h], split at cell boundaries
    let mut starts: Vec<f64> = Vec::new();
    let mut steps: Vec<f64> = Vec::new();
    let mut theta = theta_lo;
    let min_step = (theta_hi - theta_lo) * 1e-12;
    while theta < theta_hi {
        let mut s: f64 = 1.6;
        if refine.right_edge {
            s = s.min(theta);
        }
        if refine.left_edge {
            s = s.min(PI - theta);
        }
        let s = s.max(1e-12);
        let mut h = (0.25 * s / big_n).max(min_step);
        // split at the next lower cell boundary so fine intervals never straddle
        let x_here = 2.0 * theta.cos();
        let cell = ((x_here + 2.0) / cell_w).floor();
        let x_boundary = -2.0 + cell * cell_w;
        if x_boundary > -2.0 + 1e-15 && 2.0 * (theta + h).cos() < x_boundary {
            let theta_b = (x_boundary / 2.0).acos();
            if theta_b > theta + min_step {
                h = theta_b - theta;
            }
        }
        if theta + h > theta_hi {
            h = theta_hi - theta;
        }
        starts.push(theta);
        steps.push(h);
        theta += h;
    }
    // Cap transient memory: each fine interval costs 16 bytes here plus a
    // mass later; half a gigabyte means the parameters are off.
    if starts.len() > (1 << 25) {
        return Err(Error::InvalidParameter(format!(
            "dyadic-cell sampling would need {} fine intervals; lower n or widen the window",
            starts.len()
        )));
    }
    if starts.is_empty() {
        return Err(Error::EmptyGrid);
    }

    // 2) two-point Gauss weights per fine interval, in parallel
    const GAUSS: f64 = 0.288675134594812882; // 1/(2√3)
    let masses: Vec<Result<f64>> = starts
        .par_iter()
        .zip(steps.par_iter())
        .map(|(&t0, &h)| {
            let g = |t: f64| -> Result<f64> {
                Ok(density(2.0 * t.cos())? * 2.0 * t.sin())
            };
            let mid = t0 + 0.5 * h;
            Ok(0.5 * h * (g(mid - GAUSS * h)? + g(mid + GAUSS * h)?))
        })
        .collect();

    // 3) aggregate into cells keyed by the interval midpoint
    let j_min = ((left + 2.0) / cell_w).floor() as usize;
    let j_max = (((right + 2.0) / cell_w).floor() as usize).min(cells - 1);
    let mut cell_mass = vec![0.0_f64; j_max - j_min + 1];
    for ((&t0, &h), m) in starts.iter().zip(&steps).zip(masses) {
        let x_mid = 2.0 * (t0 + 0.5 * h).cos();
        let j = (((x_mid + 2.0) / cell_w).floor() as usize).clamp(j_min, j_max);
        cell_mass[j - j_min] += m?;
    }

    let nodes: Vec<f64> = (j_min..=j_max)
        .map(|j| -2.0 + (j as f64 + 0.5) * cell_w)
        .collect();
    QuadratureMeasure::from_parts(nodes, cell_mass)
}

/// Per-depth supremum of `mass(I)/|I|^α` over the dyadic intervals of
/// `[-2, 2]` at one depth.
#[derive(Debug, Clone, Copy)]
pub struct DepthSup {
    pub depth: u32,
    pub sup: f64,
    /// The maximizing interval `[left, right)`.
    pub argmax: (f64, f64),
}

/// Result of a dyadic Hölder scan.
#[derive(Debug, Clone)]
pub struct HolderReport {
    pub alpha: f64,
    pub sup_ratio: f64,
    pub argmax_interval: (f64, f64),
    pub depth: u32,
    /// Per-depth suprema, so divergence is witnessed as growth across
    /// depths rather than reported as a literal infinity.
    pub per_depth: Vec<DepthSup>,
}

/// Scan `mass(I)/|I|^α` over dyadic subintervals of `[-2, 2]` at depths
/// `0..=max_depth` (depth 0 is the full interval).
pub fn holder_modulus(
    mu: &QuadratureMeasure,
    alpha: f64,
    max_depth: u32,
) -> Result<HolderReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside [0, 1]")));
    }
    if max_depth > 24 {
        return Err(Error::InvalidParameter(format!("max_depth = {max_depth} exceeds 24")));
    }
    let per_depth: Vec<DepthSup> = (0..=max_depth)
        .into_par_iter()
        .map(|depth| depth_sup(mu, alpha, depth))
        .collect();
    let best = per_depth
        .iter()
        .max_by(|a, b| a.sup.total_cmp(&b.sup))
        .expect("at least depth 0 present");
    Ok(HolderReport {
        alpha,
        sup_ratio: best.sup,
        argmax_interval: best.argmax,
        depth: best.depth,
        per_depth,
    })
}

fn depth_sup(mu: &QuadratureMeasure, alpha: f64, depth: u32) -> DepthSup {
    let width = 4.0 / (1u64 << depth) as f64;
    let denom = width.powf(alpha);
    let mut best = (f64::NEG_INFINITY, 0u64);
    let mut current_bin = u64::MAX;
    let mut current_mass = 0.0;
    let flush = |bin: u64, mass: f64, best: &mut (f64, u64)| {
        let ratio = mass / denom;
        if ratio > best.0 {
            *best = (ratio, bin);
        }
    };
    for (&x, &w) in mu.nodes().iter().zip(mu.weights()) {
        let bin = (((x + 2.0) / width) as u64).min((1u64 << depth) - 1);
        if bin != current_bin {
            if current_bin != u64::MAX {
                flush(current_bin, current_mass, &mut best);
            }
            current_bin = bin;
            current_mass = 0.0;
        }
        current_mass += w;
    }
    if current_bin != u64::MAX {
        flush(current_bin, current_mass, &mut best);
    }
    let left = -2.0 + best.1 as f64 * width;
    DepthSup { depth, sup: best.0.max(0.0), argmax: (left, left + width) }
}

/// Domination ratio at one depth.
#[derive(Debug, Clone, Copy)]
pub struct DominationDepth {
    pub depth: u32,
    pub ratio: f64,
    /// Intervals skipped because the reference mass sat below the floor
    /// while the numerator still carried mass.
    pub excluded: usize,
}

/// Max of `mass_μ(I)/mass_ref(I)` over dyadic intervals, depths
/// `1..=depth`, with a mass floor of `1e-12 · total` on the reference.
pub fn domination_by_depth(
    mu: &QuadratureMeasure,
    mu_ref: &QuadratureMeasure,
    depth: u32,
) -> Result<Vec<DominationDepth>> {
    if depth == 0 || depth > 24 {
        return Err(Error::InvalidParameter(format!("depth = {depth} outside 1..=24")));
    }
    let floor = 1e-12 * mu_ref.total_mass();
    let mut out = Vec::with_capacity(depth as usize);
    let mut any_compared = false;
    for d in 1..=depth {
        let bins = 1usize << d;
        let width = 4.0 / bins as f64;
        let mut num = vec![0.0_f64; bins];
        let mut den = vec![0.0_f64; bins];
        for (&x, &w) in mu.nodes().iter().zip(mu.weights()) {
            num[(((x + 2.0) / width) as usize).min(bins - 1)] += w;
        }
        for (&x, &w) in mu_ref.nodes().iter().zip(mu_ref.weights()) {
            den[(((x + 2.0) / width) as usize).min(bins - 1)] += w;
        }
        let mut ratio = 0.0_f64;
        let mut excluded = 0usize;
        for (n, d_mass) in num.iter().zip(&den) {
            if *d_mass >= floor && *d_mass > 0.0 {
                ratio = ratio.max(n / d_mass);
                any_compared = true;
            } else if *n > 0.0 {
                excluded += 1;
            }
        }
        out.push(DominationDepth { depth: d, ratio, excluded });
    }
    if !any_compared {
        return Err(Error::ReferenceMassFloor);
    }
    Ok(out)
}

/// Single-number form of [`domination_by_depth`]: the max over depths.
pub fn domination_ratio(
    mu: &QuadratureMeasure,
    mu_ref: &QuadratureMeasure,
    depth: u32,
) -> Result<f64> {
    Ok(domination_by_depth(mu, mu_ref, depth)?
        .iter()
        .map(|d| d.ratio)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free::free_density;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn carmona_free_dirichlet_center() {
        // A(0) is orthogonal, so ‖Aⁿu₀‖ = 1 and the approximant is 1/π.
        for n in [1, 7, 100, 2001] {
            let d = carmona_density(0.0, &PotentialSpec::Zero, &BoundaryCondition::DIRICHLET, n)
                .unwrap();
            assert!((d - 1.0 / PI).abs() < 1e-14);
        }
    }

    #[test]
    fn carmona_zero_coupling_matches_free() {
        let spec = PotentialSpec::perturbed(
            PotentialSpec::Zero,
            0.0,
            PotentialSpec::sampled(vec![1.0, -0.5], 1),
        );
        for &x in &[-1.2, 0.3, 1.7] {
            let a = carmona_density(x, &spec, &BoundaryCondition::mixed_plus(), 321).unwrap();
            let b = carmona_density(x, &PotentialSpec::Zero, &BoundaryCondition::mixed_plus(), 321)
                .unwrap();
            // evaluation routes differ (support shortcut kicks in at
            // different sites), so equality is up to rounding only
            assert!((a - b).abs() <= 1e-12 * b, "x = {x}");
        }
    }

    #[test]
    fn measure_constructor_validation() {
        assert!(matches!(
            QuadratureMeasure::from_parts(vec![], vec![]),
            Err(Error::EmptyGrid)
        ));
        assert!(QuadratureMeasure::from_parts(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(QuadratureMeasure::from_parts(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        let m = QuadratureMeasure::from_parts(vec![0.0, 1.0], vec![0.25, 0.75]).unwrap();
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_and_touching_windows_error() {
        let bc = BoundaryCondition::DIRICHLET;
        assert!(matches!(
            build_measure(&PotentialSpec::Zero, &bc, 10, (-2.0, 1.0), GridRule::UniformTheta { nodes: 8 }),
            Err(Error::WindowTouchesEdge { .. })
        ));
        assert!(matches!(
            build_measure(&PotentialSpec::Zero, &bc, 10, (-1.0, 1.0), GridRule::UniformTheta { nodes: 0 }),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn free_dirichlet_mass_matches_closed_form() {
        let bc = BoundaryCondition::DIRICHLET;
        let mu = build_measure(
            &PotentialSpec::Zero,
            &bc,
            400,
            (-1.995, 1.995),
            GridRule::UniformTheta { nodes: 16_384 },
        )
        .unwrap();
        // oracle: dense quadrature of the closed form on the same window
        let oracle = closed_form_mass(0.0, -1.995, 1.995);
        assert!((mu.total_mass() - oracle).abs() < 1e-3);
    }

    #[test]
    fn mixed_condition_mass_concentrates_at_left_edge() {
        let bc = BoundaryCondition::mixed_plus();
        let mu = build_measure(
            &PotentialSpec::Zero,
            &bc,
            400,
            (-1.99, 1.99),
            GridRule::UniformTheta { nodes: 16_384 },
        )
        .unwrap();
        let left = mu.interval_mass(-2.0, -1.5);
        let right = mu.interval_mass(1.5, 2.0);
        assert!(left > 4.0 * right, "left = {left}, right = {right}");
    }

    fn closed_form_mass(beta: f64, left: f64, right: f64) -> f64 {
        let n = 200_000;
        let theta_lo = (right / 2.0).acos();
        let theta_hi = (left / 2.0).acos();
        let h = (theta_hi - theta_lo) / n as f64;
        (0..n)
            .map(|j| {
                let t = theta_lo + (j as f64 + 0.5) * h;
                let x = 2.0 * t.cos();
                free_density(x, beta).unwrap() * 2.0 * t.sin() * h
            })
            .sum()
    }

    #[test]
    fn dyadic_cells_agree_with_uniform_theta_on_smooth_case() {
        let bc = BoundaryCondition::DIRICHLET;
        let window = (-1.5, 1.5);
        let a = build_measure(&PotentialSpec::Zero, &bc, 50, window, GridRule::DyadicCells { cells: 1 << 10 }).unwrap();
        let b = build_measure(&PotentialSpec::Zero, &bc, 50, window, GridRule::UniformTheta { nodes: 1 << 15 }).unwrap();
        for (l, r) in [(-1.5, -0.5), (-0.5, 0.5), (0.5, 1.5)] {
            let ma = a.interval_mass(l, r);
            let mb = b.interval_mass(l, r);
            assert!((ma - mb).abs() < 5e-3 * mb.max(1e-3), "[{l}, {r}]: {ma} vs {mb}");
        }
    }

    #[test]
    fn interval_mass_additive_and_total() {
        let mu = build_measure(
            &PotentialSpec::Zero,
            &BoundaryCondition::DIRICHLET,
            60,
            (-1.9, 1.9),
            GridRule::UniformX { nodes: 4096 },
        )
        .unwrap();
        assert!((mu.interval_mass(-2.0, 2.0) - mu.total_mass()).abs() < 1e-12);
        assert_eq!(mu.interval_mass(3.0, 4.0), 0.0);
        let whole = mu.interval_mass(-1.0, 1.0);
        let halves = mu.interval_mass(-1.0, 0.0) + mu.interval_mass(0.0, 1.0);
        assert!((whole - halves).abs() < 1e-12);
    }

    #[test]
    fn holder_at_alpha_zero_is_total_mass() {
        let mu = QuadratureMeasure::from_parts(vec![-1.0, 0.5, 1.25], vec![0.2, 0.3, 0.1]).unwrap();
        let rep = holder_modulus(&mu, 0.0, 6).unwrap();
        assert!((rep.sup_ratio - mu.total_mass()).abs() < 1e-15);
    }

    #[test]
    fn holder_atom_diverges_with_depth() {
        let mu = QuadratureMeasure::atom(0.3, 1.0);
        let rep = holder_modulus(&mu, 0.5, 12).unwrap();
        // per-depth sups grow like width^{-1/2}
        let s4 = rep.per_depth[4].sup;
        let s12 = rep.per_depth[12].sup;
        assert!(s12 > 10.0 * s4);
    }

    #[test]
    fn holder_free_dirichlet_is_lipschitz_stable() {
        let mu = build_measure(
            &PotentialSpec::Zero,
            &BoundaryCondition::DIRICHLET,
            2_000,
            (-1.99, 1.99),
            GridRule::DyadicCells { cells: 1 << 14 },
        )
        .unwrap();
        let rep = holder_modulus(&mu, 1.0, 10).unwrap();
        // bounded density, max 1/π: ratios stay near 1/π across depths
        for d in &rep.per_depth[4..] {
            assert!(d.sup < 1.0 / PI + 0.02, "depth {}: {}", d.depth, d.sup);
            assert!(d.sup > 1.0 / PI - 0.05, "depth {}: {}", d.depth, d.sup);
        }
    }

    #[test]
    fn holder_monotone_in_alpha_below_unit_lengths() {
        let mu = build_measure(
            &PotentialSpec::Zero,
            &BoundaryCondition::mixed_plus(),
            500,
            (-1.9, 1.9),
            GridRule::UniformTheta { nodes: 8192 },
        )
        .unwrap();
        // depths ≥ 2 keep |I| ≤ 1, where the ratio is nondecreasing in α
        let mut prev = 0.0;
        for &alpha in &[0.2, 0.4, 0.6, 0.8, 1.0] {
            let rep = holder_modulus(&mu, alpha, 10).unwrap();
            let sup_deep = rep.per_depth[2..]
                .iter()
                .map(|d| d.sup)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(sup_deep >= prev - 1e-12, "alpha = {alpha}");
            prev = sup_deep;
        }
    }

    #[test]
    fn domination_identity_and_scaling() {
        let mu = build_measure(
            &PotentialSpec::Zero,
            &BoundaryCondition::DIRICHLET,
            200,
            (-1.9, 1.9),
            GridRule::UniformTheta { nodes: 2048 },
        )
        .unwrap();
        let r = domination_ratio(&mu, &mu, 8).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let doubled = mu.scaled(2.0).unwrap();
        let r2 = domination_ratio(&doubled, &mu, 8).unwrap();
        assert!((r2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn domination_floor_error() {
        let mu = QuadratureMeasure::atom(0.0, 1.0);
        let null = QuadratureMeasure::atom(1.0, 0.0);
        assert!(matches!(
            domination_by_depth(&mu, &null, 4),
            Err(Error::ReferenceMassFloor)
        ));
    }

    #[test]
    fn csv_round_trip() {
        let mu = QuadratureMeasure::from_parts(vec![-0.5, 0.25, 1.0], vec![0.1, 0.2, 0.3]).unwrap();
        let meta = MeasureMeta {
            window: (-1.0, 1.0),
            carmona_n: 17,
            beta: FRAC_PI_4,
            spec_digest: PotentialSpec::Zero.digest(),
        };
        let mut buf = Vec::new();
        mu.write_csv(&mut buf, &meta).unwrap();
        let back = QuadratureMeasure::read_csv(&buf[..]).unwrap();
        assert_eq!(mu, back);
    }

    #[test]
    fn merge_add_combines_grids() {
        let a = QuadratureMeasure::from_parts(vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let b = QuadratureMeasure::from_parts(vec![0.0, 0.5], vec![3.0, 4.0]).unwrap();
        let m = a.merge_add(&b).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(m.weights(), &[4.0, 4.0, 2.0]);
    }
}
