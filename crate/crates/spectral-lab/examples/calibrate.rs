//! Scratch calibration runs for pinning acceptance thresholds.

use spectral_lab::asymptotics::*;
use spectral_lab::dynamics::*;
use spectral_lab::lattice::*;
use spectral_lab::measure::*;
use spectral_lab::quasiperiodic::*;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());
    match which.as_str() {
        "decay" => decay(),
        "holder" => holder(),
        "dom" => domination(),
        "pk" => pk(),
        "jl" => jl(),
        "sandwich" => sandwich(),
        "nubeta" => nubeta(),
        _ => {
            decay();
            holder();
        }
    }
}

fn pert_b() -> PotentialSpec {
    exp_decay_perturbation(1.0, 4.0, 5.0, 0.0, 0.0, 20250810, 200).unwrap()
}

fn decay() {
    let start = std::time::Instant::now();
    let b = pert_b();
    let kappa = 0.05;
    let nodes = 1 << 20;
    let n = 100_000;
    for (name, spec, bc, window) in [
        ("free-dirichlet", PotentialSpec::Zero, BoundaryCondition::DIRICHLET, (-1.999, 1.999)),
        (
            "pert-dirichlet",
            PotentialSpec::perturbed(PotentialSpec::Zero, kappa, b.clone()),
            BoundaryCondition::DIRICHLET,
            (-1.999, 1.999),
        ),
        (
            "free-pi4",
            PotentialSpec::Zero,
            BoundaryCondition::mixed_plus(),
            (-2.0 + 1e-8, 2.0 - 1e-8),
        ),
        (
            "pert-pi4",
            PotentialSpec::perturbed(PotentialSpec::Zero, kappa, b.clone()),
            BoundaryCondition::mixed_plus(),
            (-2.0 + 1e-8, 2.0 - 1e-8),
        ),
    ] {
        let grid = if bc == BoundaryCondition::DIRICHLET {
            GridRule::UniformX { nodes }
        } else {
            GridRule::DyadicCells { cells: nodes }
        };
        let mu = build_measure(&spec, &bc, n, window, grid).unwrap();
        let ts = log_t_grid(1e2, 1e4, 32);
        let curve = decay_curve(&mu, &ts, AverageKernel::TimeAverage).unwrap();
        let fit = decay_fit(&curve, 1e2, 1e4).unwrap();
        println!(
            "{name}: mass={:.6} slope={:.4} (r2={:.5}) logcoef={:.5} (r2={:.5})  [{:.1?}]",
            mu.total_mass(),
            fit.exponent,
            fit.exponent_r_squared,
            fit.log_coefficient,
            fit.log_r_squared,
            start.elapsed()
        );
        // Gaussian slope for the free Dirichlet case
        if name == "free-dirichlet" {
            let g = decay_curve(&mu, &ts, AverageKernel::Gaussian).unwrap();
            let gf = decay_fit(&g, 1e2, 1e4).unwrap();
            println!("  gaussian slope={:.4} r2={:.5}", gf.exponent, gf.exponent_r_squared);
        }
    }
}

fn nubeta() {
    for beta in [0.6, 0.75, 0.9] {
        for cells in [1usize << 18, 1 << 20] {
            let mu = example31_measure_cells(beta, cells).unwrap();
            let ts = log_t_grid(1e2, 1e4, 32);
            let curve = decay_curve(&mu, &ts, AverageKernel::TimeAverage).unwrap();
            let fit = decay_fit(&curve, 1e2, 1e4).unwrap();
            println!(
                "nu_beta {beta} cells=2^{}: slope={:.4} target={:.4} (r2={:.6})",
                cells.trailing_zeros(),
                fit.exponent,
                -2.0 * (1.0 - beta),
                fit.exponent_r_squared
            );
        }
        // u-grid variant at moderate size over a shorter window
        let mu = example31_measure(beta, 8192).unwrap();
        let ts = log_t_grid(1e1, 1e3, 24);
        let curve = decay_curve(&mu, &ts, AverageKernel::TimeAverage).unwrap();
        let fit = decay_fit(&curve, 1e1, 1e3).unwrap();
        println!("  u-grid 8192 over [10,1e3]: slope={:.4}", fit.exponent);
    }
}

fn holder() {
    let start = std::time::Instant::now();
    let b = pert_b();
    let kappa = 0.05;
    let n = 50_000;
    let cells = 1usize << 17;
    let pert = PotentialSpec::perturbed(PotentialSpec::Zero, kappa, b);

    for eps in [0.1, 0.01, 0.001] {
        let mu = build_measure(
            &pert,
            &BoundaryCondition::DIRICHLET,
            n,
            (-2.0 + eps, 2.0 - eps),
            GridRule::DyadicCells { cells },
        )
        .unwrap();
        let rep = holder_modulus(&mu, 1.0, 14).unwrap();
        let sups: Vec<f64> = rep.per_depth[10..=14].iter().map(|d| d.sup).collect();
        println!(
            "dirichlet M1 eps={eps}: depths 10..14 = {:?} spread = {:.4} [{:.1?}]",
            sups,
            sups.iter().cloned().fold(f64::MIN, f64::max)
                / sups.iter().cloned().fold(f64::MAX, f64::min),
            start.elapsed()
        );
    }

    for eps in [1e-6, 1e-8] {
        let mu = build_measure(
            &pert,
            &BoundaryCondition::mixed_plus(),
            n,
            (-2.0 + eps, 2.0 - eps),
            GridRule::DyadicCells { cells },
        )
        .unwrap();
        let rep = holder_modulus(&mu, 0.5, 14).unwrap();
        let sups: Vec<f64> = rep.per_depth[10..=14].iter().map(|d| d.sup).collect();
        println!(
            "pi4 M_1/2 eps={eps}: depths 10..14 = {:?} spread = {:.4}",
            sups,
            sups.iter().cloned().fold(f64::MIN, f64::max)
                / sups.iter().cloned().fold(f64::MAX, f64::min)
        );
        let rep6 = holder_modulus(&mu, 0.6, 14).unwrap();
        println!(
            "pi4 M_0.6 eps={eps}: d8 = {:.4} d14 = {:.4} growth = {:.4} argmax14 = {:?}",
            rep6.per_depth[8].sup,
            rep6.per_depth[14].sup,
            rep6.per_depth[14].sup / rep6.per_depth[8].sup,
            rep6.per_depth[14].argmax
        );
    }
}

fn domination() {
    let b = pert_b();
    let kappa = 0.05;
    let n = 50_000;
    let cells = 1usize << 14;
    let window = (-1.999, 1.999);
    let pert = PotentialSpec::perturbed(PotentialSpec::Zero, kappa, b);

    // Dirichlet
    let mu = build_measure(&pert, &BoundaryCondition::DIRICHLET, n, window, GridRule::DyadicCells { cells }).unwrap();
    let mu_ref = build_measure(&PotentialSpec::Zero, &BoundaryCondition::DIRICHLET, n, window, GridRule::DyadicCells { cells }).unwrap();
    let by_depth = domination_by_depth(&mu, &mu_ref, 12).unwrap();
    println!("dirichlet domination:");
    for d in &by_depth[5..] {
        println!("  depth {}: ratio {:.4} excluded {}", d.depth, d.ratio, d.excluded);
    }

    // π/4 against the two-sided free reference
    let mu = build_measure(&pert, &BoundaryCondition::mixed_plus(), n, window, GridRule::DyadicCells { cells }).unwrap();
    let ref_plus = build_measure(&PotentialSpec::Zero, &BoundaryCondition::mixed_plus(), n, window, GridRule::DyadicCells { cells }).unwrap();
    let ref_minus = build_measure(&PotentialSpec::Zero, &BoundaryCondition::mixed_minus(), n, window, GridRule::DyadicCells { cells }).unwrap();
    let mu_ref = ref_plus.merge_add(&ref_minus).unwrap();
    let by_depth = domination_by_depth(&mu, &mu_ref, 12).unwrap();
    println!("pi4 domination (vs mu_pi4 + mu_-pi4):");
    for d in &by_depth[5..] {
        println!("  depth {}: ratio {:.4} excluded {}", d.depth, d.ratio, d.excluded);
    }
}

fn am_in_spectrum_energies(count: usize, l: usize) -> Vec<f64> {
    let spec = almost_mathieu_spec(0.1, golden_mean(), 0.0);
    let survivors: Vec<f64> = (0..16 * count)
        .map(|i| -2.15 + 4.3 * (i as f64 + 0.5) / (16 * count) as f64)
        .filter(|&x| {
            last_simon_diagnostics(x, &spec, l)
                .map(|d| d.cesaro <= 100.0)
                .unwrap_or(false)
        })
        .collect();
    let stride = survivors.len() / count;
    (0..count).map(|i| survivors[i * stride]).collect()
}

fn pk() {
    let start = std::time::Instant::now();
    let am = almost_mathieu_spec(0.1, golden_mean(), 0.0);
    let b = exp_decay_perturbation(1.0, 4.0, 5.0, 0.1, 2.0, 77, 200).unwrap();
    let env = DecayEnvelope::new(1.0, 4.0, 5.0, 0.2).unwrap();
    let energies = am_in_spectrum_energies(64, 999);
    println!("selected {} energies in [{:.3}, {:.3}]", energies.len(), energies[0], energies[energies.len()-1]);
    let mut worst_lo: f64 = 1.0;
    let mut worst_hi: f64 = 1.0;
    let mut worst_cauchy: f64 = 0.0;
    for &x in &energies {
        let ratios = pk_comparison(x, &am, &b, 0.05, &env, 500).unwrap();
        for r in &ratios {
            worst_lo = worst_lo.min(r.norm_ratio).min(r.det_ratio);
            worst_hi = worst_hi.max(r.norm_ratio).max(r.det_ratio);
        }
        let late: Vec<&PkRatio> = ratios.iter().filter(|r| r.k >= 250).collect();
        for series in ["norm", "det"] {
            let vals: Vec<f64> = late
                .iter()
                .map(|r| if series == "norm" { r.norm_ratio } else { r.det_ratio })
                .collect();
            let maxv = vals.iter().cloned().fold(f64::MIN, f64::max);
            let minv = vals.iter().cloned().fold(f64::MAX, f64::min);
            let last = vals[vals.len() - 1];
            worst_cauchy = worst_cauchy.max((maxv - minv) / last);
        }
    }
    println!(
        "pk ratios over 64 energies, k<=500: range [{:.4}, {:.4}], worst cauchy spread {:.5} [{:.1?}]",
        worst_lo, worst_hi, worst_cauchy, start.elapsed()
    );
}

fn jl() {
    let mut lo: f64 = f64::MAX;
    let mut hi: f64 = f64::MIN;
    for i in 0..32 {
        let x = -1.9 + 3.8 * (i as f64 + 0.5) / 32.0;
        for k in [1usize, 5, 10, 25, 50, 100, 150, 200] {
            let b = jl_bracket(x, &PotentialSpec::Zero, k).unwrap();
            lo = lo.min(b.ratio);
            hi = hi.max(b.ratio);
        }
    }
    println!("jl bracket over 32 energies, k in 1..=200: [{lo:.4}, {hi:.4}]");
}

fn sandwich() {
    let b = pert_b();
    let env = DecayEnvelope::new(1.0, 4.0, 5.0, 0.0).unwrap();
    let mut gamma_hat: f64 = 1.0;
    let mut worst_rn: f64 = 0.0;
    for i in 0..128 {
        let x = -1.9 + 3.8 * (i as f64 + 0.5) / 128.0;
        let s = norm_sandwich(x, &PotentialSpec::Zero, &b, 0.05, &env, 500).unwrap();
        gamma_hat = gamma_hat.max(s.gamma_hat);
        worst_rn = worst_rn.max(s.r_n);
    }
    println!("sandwich on 128 energies, n=500: gamma_hat = {gamma_hat:.5}, max r_n = {worst_rn:.3e}");
    // R_n^{1/n} envelope
    let exp = perturbation_expansion(0.5, &PotentialSpec::Zero, &b, 0.05, &env, 200).unwrap();
    let mut worst: f64 = 0.0;
    for n in 20..=200 {
        let r = exp.r_norm(n);
        if r > 0.0 {
            worst = worst.max(r.powf(1.0 / n as f64));
        }
    }
    println!("max ||R_n||^(1/n) for n in [20,200] at x=0.5: {worst:.5} vs bound 0.1125");
}
