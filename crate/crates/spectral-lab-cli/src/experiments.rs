//! Experiment dispatch: resolve a config into library calls, write data
//! CSVs, a verdict file, and a manifest.
//!
//! Every output is deterministic for a given config: fixed seeds, fixed
//! reduction orders, no timestamps. Verdict lines carry the parameters
//! needed to reproduce them.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use spectral_lab::asymptotics::{
    jl_bracket, last_simon_diagnostics, norm_sandwich, perturbation_expansion, pk_comparison,
    psi_sup,
};
use spectral_lab::dynamics::{
    decay_curve, decay_fit, example31_measure_cells, log_t_grid, AverageKernel,
};
use spectral_lab::free::free_density;
use spectral_lab::lattice::{BoundaryCondition, DecayEnvelope, PotentialSpec};
use spectral_lab::measure::{
    build_measure, domination_by_depth, holder_modulus, GridRule, MeasureMeta, QuadratureMeasure,
};
use spectral_lab::quasiperiodic::{
    almost_mathieu_spec, diophantine_check, exp_decay_perturbation, golden_mean, DiophantineParams,
};

use crate::config::{ConfigError, RawConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Density,
    Holder,
    Dynamics,
    Asymptotics,
    Pk,
    Diophantine,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Density => "density",
            ExperimentKind::Holder => "holder",
            ExperimentKind::Dynamics => "dynamics",
            ExperimentKind::Asymptotics => "asymptotics",
            ExperimentKind::Pk => "pk",
            ExperimentKind::Diophantine => "diophantine",
        }
    }
}

/// Failure modes of a run, mapped to exit codes by `main`.
#[derive(Debug)]
pub enum RunError {
    /// Exit 2: the config is malformed or inconsistent.
    Config(String),
    /// Exit 1: a numeric operation failed; carries the operation name.
    Numeric { operation: &'static str, source: spectral_lab::Error },
    /// Exit 1: filesystem trouble.
    Io(std::io::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.message)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

fn numeric(operation: &'static str) -> impl FnOnce(spectral_lab::Error) -> RunError {
    move |source| RunError::Numeric { operation, source }
}

/// Operator block resolved from `[operator]`.
struct OperatorConfig {
    potential: String,
    lambda: f64,
    alpha: f64,
    theta: f64,
    boundary: BoundaryCondition,
    boundary_label: String,
    kappa: f64,
    gamma: f64,
    decay_a: f64,
    decay_tau: f64,
    seed: u64,
    b_range: i64,
    perturbed: bool,
}

impl OperatorConfig {
    fn resolve(cfg: &RawConfig) -> Result<Self, RunError> {
        let potential = cfg.get("operator", "potential").unwrap_or("free").to_string();
        if potential != "free" && potential != "almost_mathieu" {
            return Err(RunError::Config(format!(
                "[operator] potential: `{potential}` is not free|almost_mathieu"
            )));
        }
        let alpha = match cfg.get("operator", "alpha") {
            None | Some("golden") => golden_mean(),
            Some(v) => v.parse().map_err(|_| {
                RunError::Config(format!("[operator] alpha: `{v}` is not golden|<float>"))
            })?,
        };
        let boundary_label = cfg.get("operator", "boundary").unwrap_or("dirichlet").to_string();
        let boundary = match boundary_label.as_str() {
            "dirichlet" => BoundaryCondition::DIRICHLET,
            "plus_pi4" => BoundaryCondition::mixed_plus(),
            "minus_pi4" => BoundaryCondition::mixed_minus(),
            v => {
                let beta: f64 = v.parse().map_err(|_| {
                    RunError::Config(format!(
                        "[operator] boundary: `{v}` is not dirichlet|plus_pi4|minus_pi4|<float>"
                    ))
                })?;
                BoundaryCondition::new(beta)
                    .map_err(|e| RunError::Config(format!("[operator] boundary: {e}")))?
            }
        };
        let perturbation = cfg.get("operator", "perturbation").unwrap_or("none");
        let perturbed = match perturbation {
            "none" => false,
            "exp_decay" => true,
            v => {
                return Err(RunError::Config(format!(
                    "[operator] perturbation: `{v}` is not none|exp_decay"
                )))
            }
        };
        Ok(OperatorConfig {
            potential,
            lambda: cfg.f64("operator", "lambda", 0.1)?,
            alpha,
            theta: cfg.f64("operator", "theta", 0.0)?,
            boundary,
            boundary_label,
            kappa: cfg.f64("operator", "kappa", 0.05)?,
            gamma: cfg.f64("operator", "gamma", 1.0)?,
            decay_a: cfg.f64("operator", "decay_a", 4.0)?,
            decay_tau: cfg.f64("operator", "decay_tau", 5.0)?,
            seed: cfg.u64("operator", "seed", 1)?,
            b_range: cfg.u64("operator", "b_range", 150)? as i64,
            perturbed,
        })
    }

    fn base_spec(&self) -> PotentialSpec {
        match self.potential.as_str() {
            "almost_mathieu" => almost_mathieu_spec(self.lambda, self.alpha, self.theta),
            _ => PotentialSpec::Zero,
        }
    }

    fn vnorm(&self) -> f64 {
        match self.potential.as_str() {
            "almost_mathieu" => 2.0 * self.lambda.abs(),
            _ => 0.0,
        }
    }

    fn envelope(&self) -> Result<DecayEnvelope, RunError> {
        DecayEnvelope::new(self.gamma, self.decay_a, self.decay_tau, self.vnorm())
            .map_err(|e| RunError::Config(format!("[operator] decay envelope: {e}")))
    }

    fn perturbation(&self) -> Result<Option<PotentialSpec>, RunError> {
        if !self.perturbed {
            return Ok(None);
        }
        let b = exp_decay_perturbation(
            self.gamma,
            self.decay_a,
            self.decay_tau,
            if self.potential == "almost_mathieu" { self.lambda } else { 0.0 },
            if self.potential == "almost_mathieu" { 2.0 } else { 0.0 },
            self.seed,
            self.b_range,
        )
        .map_err(numeric("exp_decay_perturbation"))?;
        Ok(Some(b))
    }

    fn full_spec(&self) -> Result<PotentialSpec, RunError> {
        Ok(match self.perturbation()? {
            Some(b) => PotentialSpec::perturbed(self.base_spec(), self.kappa, b),
            None => self.base_spec(),
        })
    }

    fn manifest_lines(&self, out: &mut String) {
        let _ = writeln!(out, "operator.potential = {}", self.potential);
        if self.potential == "almost_mathieu" {
            let _ = writeln!(out, "operator.lambda = {}", self.lambda);
            let _ = writeln!(out, "operator.alpha = {}", self.alpha);
            let _ = writeln!(out, "operator.theta = {}", self.theta);
        }
        let _ = writeln!(out, "operator.boundary = {}", self.boundary_label);
        let _ = writeln!(out, "operator.beta = {}", self.boundary.beta());
        let _ = writeln!(
            out,
            "operator.perturbation = {}",
            if self.perturbed { "exp_decay" } else { "none" }
        );
        if self.perturbed {
            let _ = writeln!(out, "operator.kappa = {}", self.kappa);
            let _ = writeln!(out, "operator.gamma = {}", self.gamma);
            let _ = writeln!(out, "operator.decay_a = {}", self.decay_a);
            let _ = writeln!(out, "operator.decay_tau = {}", self.decay_tau);
            let _ = writeln!(out, "operator.seed = {}", self.seed);
            let _ = writeln!(out, "operator.b_range = {}", self.b_range);
        }
    }
}

struct Verdict {
    pass: bool,
    name: String,
    details: String,
}

/// Shared run state: resolved config, output prefix, collected verdicts.
pub struct Runner {
    kind: ExperimentKind,
    cfg: RawConfig,
    out_prefix: PathBuf,
    digest: String,
    verdicts: Vec<Verdict>,
    manifest_extra: String,
}

impl Runner {
    pub fn new(kind: ExperimentKind, text: &str, out_prefix: PathBuf) -> Result<Self, RunError> {
        let cfg = RawConfig::parse(text)?;
        if let Some(k) = cfg.get("experiment", "kind") {
            if k != kind.name() {
                return Err(RunError::Config(format!(
                    "[experiment] kind = {k} does not match subcommand `{}`",
                    kind.name()
                )));
            }
        }
        let digest = hex(&Sha256::digest(text.as_bytes()));
        Ok(Runner { kind, cfg, out_prefix, digest, verdicts: Vec::new(), manifest_extra: String::new() })
    }

    pub fn run(mut self) -> Result<bool, RunError> {
        if let Some(dir) = self.out_prefix.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        match self.kind {
            ExperimentKind::Density => self.run_density()?,
            ExperimentKind::Holder => self.run_holder()?,
            ExperimentKind::Dynamics => self.run_dynamics()?,
            ExperimentKind::Asymptotics => self.run_asymptotics()?,
            ExperimentKind::Pk => self.run_pk()?,
            ExperimentKind::Diophantine => self.run_diophantine()?,
        }
        self.write_manifest()?;
        self.write_verdicts()?;
        Ok(self.verdicts.iter().all(|v| v.pass))
    }

    fn pass(&mut self, name: &str, details: String) {
        self.verdicts.push(Verdict { pass: true, name: name.into(), details });
    }

    fn check(&mut self, name: &str, pass: bool, details: String) {
        self.verdicts.push(Verdict { pass, name: name.into(), details });
    }

    fn path(&self, suffix: &str) -> PathBuf {
        let mut s = self.out_prefix.as_os_str().to_os_string();
        s.push(format!("_{suffix}"));
        PathBuf::from(s)
    }

    fn csv_header(&self, out: &mut String, columns: &str) {
        let _ = writeln!(out, "# spectral-lab {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "# experiment = {}", self.kind.name());
        let _ = writeln!(out, "# config_sha256 = {}", self.digest);
        let _ = writeln!(out, "{columns}");
    }

    fn grid_rule(&self) -> Result<(GridRule, usize), RunError> {
        let nodes = self.cfg.usize("numeric", "nodes", 8192)?;
        if nodes == 0 || nodes > (1 << 24) {
            return Err(RunError::Config(format!(
                "[numeric] nodes = {nodes} outside 1..=2^24"
            )));
        }
        let rule = match self.cfg.get("numeric", "grid").unwrap_or("uniform_theta") {
            "uniform_theta" => GridRule::UniformTheta { nodes },
            "uniform_x" => GridRule::UniformX { nodes },
            "dyadic_cells" => GridRule::DyadicCells { cells: nodes },
            v => {
                return Err(RunError::Config(format!(
                    "[numeric] grid: `{v}` is not uniform_theta|uniform_x|dyadic_cells"
                )))
            }
        };
        Ok((rule, nodes))
    }

    fn window(&self) -> Result<(f64, f64), RunError> {
        let eps = self.cfg.f64("numeric", "window", 1e-3)?;
        if !(eps > 0.0 && eps < 2.0) {
            return Err(RunError::Config(format!("[numeric] window = {eps} outside (0, 2)")));
        }
        Ok((-2.0 + eps, 2.0 - eps))
    }

    fn build_configured_measure(
        &mut self,
        op: &OperatorConfig,
    ) -> Result<(QuadratureMeasure, usize, (f64, f64)), RunError> {
        let (grid, _) = self.grid_rule()?;
        let window = self.window()?;
        let n = self.cfg.usize("numeric", "carmona_n", 2000)?;
        let spec = op.full_spec()?;
        let mu = build_measure(&spec, &op.boundary, n, window, grid)
            .map_err(numeric("build_measure"))?;
        let _ = writeln!(self.manifest_extra, "numeric.carmona_n = {n}");
        let _ = writeln!(self.manifest_extra, "numeric.window = {} {}", window.0, window.1);
        let _ = writeln!(self.manifest_extra, "numeric.grid = {grid:?}");
        Ok((mu, n, window))
    }

    fn write_measure_csv(
        &self,
        suffix: &str,
        mu: &QuadratureMeasure,
        meta: &MeasureMeta,
    ) -> Result<(), RunError> {
        let mut head = String::new();
        self.csv_header(&mut head, "");
        let mut file = fs::File::create(self.path(suffix))?;
        // measure CSV carries its own `#` metadata block before the columns
        file.write_all(head.trim_end_matches('\n').as_bytes())?;
        file.write_all(b"\n")?;
        let mut body = Vec::new();
        mu.write_csv(&mut body, meta).map_err(RunError::Io)?;
        file.write_all(&body)?;
        Ok(())
    }

    // ----- density ---------------------------------------------------

    fn run_density(&mut self) -> Result<(), RunError> {
        let op = OperatorConfig::resolve(&self.cfg)?;
        let (mu, n, window) = self.build_configured_measure(&op)?;
        let spec = op.full_spec()?;
        let meta = MeasureMeta {
            window,
            carmona_n: n,
            beta: op.boundary.beta(),
            spec_digest: spec.digest(),
        };
        self.write_measure_csv("measure.csv", &mu, &meta)?;
        op.manifest_lines(&mut self.manifest_extra);

        self.pass(
            "measure-built",
            format!(
                "total_mass = {} over window [{}, {}] (nodes = {}, carmona_n = {n})",
                mu.total_mass(),
                window.0,
                window.1,
                mu.len()
            ),
        );

        if !op.perturbed && op.potential == "free" {
            let oracle = closed_form_mass(op.boundary.beta(), window);
            let rel = (mu.total_mass() - oracle).abs() / oracle;
            self.check(
                "mass-vs-closed-form",
                rel <= 0.02,
                format!(
                    "relative error {rel:.3e} (closed-form mass {oracle}, beta = {}, carmona_n = {n})",
                    op.boundary.beta()
                ),
            );
            let mut worst: f64 = 0.0;
            for (i, bump) in bump_suite().iter().enumerate() {
                let approx = mu.integrate(|x| bump.eval(x));
                let exact = bump.integral_against_density(op.boundary.beta());
                let rel = (approx - exact).abs() / exact;
                worst = worst.max(rel);
                self.check(
                    &format!("weak-integral-bump-{i}"),
                    rel <= 0.02,
                    format!(
                        "relative error {rel:.3e} at bump center {} (carmona_n = {n})",
                        bump.center
                    ),
                );
            }
            let _ = worst;
        }
        Ok(())
    }

    // ----- holder -----------------------------------------------------

    fn run_holder(&mut self) -> Result<(), RunError> {
        let op = OperatorConfig::resolve(&self.cfg)?;
        let (mu, n, window) = self.build_configured_measure(&op)?;
        op.manifest_lines(&mut self.manifest_extra);
        let alphas = self.cfg.f64_list("numeric", "alphas", &[0.5, 1.0])?;
        let max_depth = self.cfg.usize("numeric", "max_depth", 14)? as u32;
        let stab_tol = self.cfg.f64("numeric", "stability_tol", 0.05)?;
        let stab_min = self.cfg.usize("numeric", "stability_depth_min", 10)? as u32;

        let mut csv = String::new();
        self.csv_header(&mut csv, "alpha,depth,sup_ratio,argmax_left,argmax_right");
        for &alpha in &alphas {
            let rep = holder_modulus(&mu, alpha, max_depth).map_err(numeric("holder_modulus"))?;
            for d in &rep.per_depth {
                let _ = writeln!(csv, "{alpha},{},{},{},{}", d.depth, d.sup, d.argmax.0, d.argmax.1);
            }
            let band: Vec<f64> = rep.per_depth[stab_min as usize..=max_depth as usize]
                .iter()
                .map(|d| d.sup)
                .collect();
            let hi = band.iter().cloned().fold(f64::MIN, f64::max);
            let lo = band.iter().cloned().fold(f64::MAX, f64::min);
            let spread = hi / lo - 1.0;
            self.check(
                &format!("holder-stability-alpha-{alpha}"),
                spread <= stab_tol,
                format!(
                    "spread {spread:.4} over depths {stab_min}..{max_depth} (window [{}, {}], carmona_n = {n})",
                    window.0, window.1
                ),
            );
        }
        fs::write(self.path("holder.csv"), csv)?;

        match self.cfg.get("numeric", "reference").unwrap_or("none") {
            "none" => {}
            kind @ ("free" | "free_two_sided") => {
                let (grid, _) = self.grid_rule()?;
                let mk = |bc: &BoundaryCondition| {
                    build_measure(&PotentialSpec::Zero, bc, n, window, grid)
                };
                let reference = if kind == "free" {
                    mk(&op.boundary).map_err(numeric("build_measure"))?
                } else {
                    let plus = mk(&BoundaryCondition::mixed_plus()).map_err(numeric("build_measure"))?;
                    let minus = mk(&BoundaryCondition::mixed_minus()).map_err(numeric("build_measure"))?;
                    plus.merge_add(&minus).map_err(numeric("merge_add"))?
                };
                let dom_max = self.cfg.f64("numeric", "domination_max", 4.0)?;
                let depth = max_depth.min(12);
                let by_depth = domination_by_depth(&mu, &reference, depth)
                    .map_err(numeric("domination_by_depth"))?;
                let mut csv = String::new();
                self.csv_header(&mut csv, "depth,ratio,excluded");
                for d in &by_depth {
                    let _ = writeln!(csv, "{},{},{}", d.depth, d.ratio, d.excluded);
                }
                fs::write(self.path("domination.csv"), csv)?;
                let worst = by_depth.iter().map(|d| d.ratio).fold(0.0, f64::max);
                self.check(
                    "domination",
                    worst <= dom_max,
                    format!(
                        "max ratio {worst:.4} over depths 1..{depth} vs {kind} reference (kappa = {})",
                        op.kappa
                    ),
                );
            }
            v => {
                return Err(RunError::Config(format!(
                    "[numeric] reference: `{v}` is not none|free|free_two_sided"
                )))
            }
        }
        Ok(())
    }

    // ----- dynamics ----------------------------------------------------

    fn run_dynamics(&mut self) -> Result<(), RunError> {
        let t_min = self.cfg.f64("numeric", "t_min", 1e2)?;
        let t_max = self.cfg.f64("numeric", "t_max", 1e4)?;
        if !(t_min > 0.0 && t_max > t_min) {
            return Err(RunError::Config(format!(
                "[numeric] t window [{t_min}, {t_max}] is not increasing and positive"
            )));
        }
        let ppd = self.cfg.usize("numeric", "points_per_decade", 32)?.max(1);
        let ts = log_t_grid(t_min, t_max, ppd);

        let mu = match self.cfg.get("numeric", "nu_beta") {
            Some(v) => {
                let beta: f64 = v.parse().map_err(|_| {
                    RunError::Config(format!("[numeric] nu_beta: `{v}` is not a number"))
                })?;
                let (_, nodes) = self.grid_rule()?;
                let cells = nodes.next_power_of_two();
                let _ = writeln!(self.manifest_extra, "numeric.nu_beta = {beta}");
                let _ = writeln!(self.manifest_extra, "numeric.cells = {cells}");
                example31_measure_cells(beta, cells).map_err(numeric("example31_measure_cells"))?
            }
            None => {
                let op = OperatorConfig::resolve(&self.cfg)?;
                let (mu, _, _) = self.build_configured_measure(&op)?;
                op.manifest_lines(&mut self.manifest_extra);
                mu
            }
        };

        let curve = decay_curve(&mu, &ts, AverageKernel::TimeAverage)
            .map_err(numeric("decay_curve"))?;
        let fit = decay_fit(&curve, t_min, t_max).map_err(numeric("decay_fit"))?;

        let mut csv = String::new();
        self.csv_header(&mut csv, "t,value");
        for (t, v) in &curve.samples {
            let _ = writeln!(csv, "{t},{v}");
        }
        fs::write(self.path("curve.csv"), csv)?;

        let mut sidecar = String::new();
        let _ = writeln!(sidecar, "exponent: {}", fit.exponent);
        let _ = writeln!(sidecar, "exponent_r_squared: {}", fit.exponent_r_squared);
        let _ = writeln!(sidecar, "log_coefficient: {}", fit.log_coefficient);
        let _ = writeln!(sidecar, "log_r_squared: {}", fit.log_r_squared);
        let _ = writeln!(sidecar, "t_min: {t_min}");
        let _ = writeln!(sidecar, "t_max: {t_max}");
        fs::write(self.path("fit.txt"), sidecar)?;

        self.pass(
            "decay-fit",
            format!(
                "exponent = {:.4} (r2 = {:.5}), log_coefficient = {:.5} (r2 = {:.5}) over t in [{t_min}, {t_max}]",
                fit.exponent, fit.exponent_r_squared, fit.log_coefficient, fit.log_r_squared
            ),
        );

        let slope_min = self.cfg.f64("numeric", "slope_min", f64::NAN)?;
        let slope_max = self.cfg.f64("numeric", "slope_max", f64::NAN)?;
        if slope_min.is_finite() && slope_max.is_finite() {
            let ok = fit.exponent >= slope_min && fit.exponent <= slope_max;
            self.check(
                "slope-window",
                ok,
                format!(
                    "log-log slope {:.4} in [{slope_min}, {slope_max}] over t in [{t_min}, {t_max}]",
                    fit.exponent
                ),
            );
        }
        let log_r2_min = self.cfg.f64("numeric", "log_r2_min", f64::NAN)?;
        if log_r2_min.is_finite() {
            let ok = fit.log_r_squared >= log_r2_min;
            self.check(
                "log_over_t regime",
                ok,
                format!(
                    "t*value vs log t linear fit r2 = {:.5} >= {log_r2_min} (coefficient {:.5})",
                    fit.log_r_squared, fit.log_coefficient
                ),
            );
        }
        let target = self.cfg.f64("numeric", "target_exponent", f64::NAN)?;
        if target.is_finite() {
            let tol = self.cfg.f64("numeric", "exponent_tol", 0.1)?;
            let ok = (fit.exponent - target).abs() <= tol;
            self.check(
                "exponent-target",
                ok,
                format!("exponent {:.4} within {tol} of {target}", fit.exponent),
            );
        }
        Ok(())
    }

    // ----- asymptotics --------------------------------------------------

    fn run_asymptotics(&mut self) -> Result<(), RunError> {
        let op = OperatorConfig::resolve(&self.cfg)?;
        if !op.perturbed {
            return Err(RunError::Config(
                "[operator] perturbation = exp_decay is required for asymptotics".into(),
            ));
        }
        op.manifest_lines(&mut self.manifest_extra);
        let base = op.base_spec();
        let b = op.perturbation()?.expect("perturbed checked above");
        let env = op.envelope()?;
        let n_sites = self.cfg.usize("numeric", "n_sites", 500)?.max(1);
        let e_min = self.cfg.f64("numeric", "energy_min", -1.9)?;
        let e_max = self.cfg.f64("numeric", "energy_max", 1.9)?;
        let count = self.cfg.usize("numeric", "energies", 128)?.max(2);
        let gamma_max = self.cfg.f64("numeric", "ratio_max", 2.0)?;

        let mut csv = String::new();
        self.csv_header(&mut csv, "x,t_norm,t_kappa_norm,ratio,r_n,cesaro");
        let mut gamma_hat: f64 = 1.0;
        for i in 0..count {
            let x = e_min + (e_max - e_min) * (i as f64 + 0.5) / count as f64;
            let s = norm_sandwich(x, &base, &b, op.kappa, &env, n_sites)
                .map_err(numeric("norm_sandwich"))?;
            let spec = op.full_spec()?;
            let ls = last_simon_diagnostics(x, &spec, n_sites)
                .map_err(numeric("last_simon_diagnostics"))?;
            gamma_hat = gamma_hat.max(s.gamma_hat);
            let _ = writeln!(
                csv,
                "{x},{},{},{},{},{}",
                s.t_norm, s.t_kappa_norm, s.ratio, s.r_n, ls.cesaro
            );
        }
        fs::write(self.path("sandwich.csv"), csv)?;
        self.check(
            "norm-sandwich",
            gamma_hat <= gamma_max,
            format!(
                "empirical gamma_hat {gamma_hat:.5} <= {gamma_max} over {count} energies in [{e_min}, {e_max}] at n = {n_sites} (kappa = {})",
                op.kappa
            ),
        );

        // residual envelope at the midpoint energy
        let x0 = 0.5 * (e_min + e_max);
        let expn = perturbation_expansion(x0, &base, &b, op.kappa, &env, n_sites.min(200))
            .map_err(numeric("perturbation_expansion"))?;
        let mut worst: f64 = 0.0;
        for n in 20..=n_sites.min(200) {
            let r = expn.r_norm(n);
            if r > 0.0 {
                worst = worst.max(r.powf(1.0 / n as f64));
            }
        }
        let bound = env.base().powf(3.0 - env.tau()) + 0.05;
        self.check(
            "residual-envelope",
            worst <= bound,
            format!("max ||R_n||^(1/n) = {worst:.5} <= {bound:.5} for n in [20, {}] at x = {x0}", n_sites.min(200)),
        );
        Ok(())
    }

    // ----- pk -----------------------------------------------------------

    fn run_pk(&mut self) -> Result<(), RunError> {
        let op = OperatorConfig::resolve(&self.cfg)?;
        op.manifest_lines(&mut self.manifest_extra);
        let base = op.base_spec();
        let k_max = self.cfg.usize("numeric", "k_max", 500)?.max(2);
        let count = self.cfg.usize("numeric", "energies", 64)?.max(1);
        let e_min = self.cfg.f64("numeric", "energy_min", -2.15)?;
        let e_max = self.cfg.f64("numeric", "energy_max", 2.15)?;
        let ratio_min = self.cfg.f64("numeric", "ratio_min", 0.5)?;
        let ratio_max = self.cfg.f64("numeric", "ratio_max", 2.0)?;
        let cauchy_tol = self.cfg.f64("numeric", "cauchy_tol", 0.01)?;

        let energies = in_spectrum_energies(&base, count, e_min, e_max, 2 * k_max)
            .map_err(numeric("last_simon_diagnostics"))?;
        let _ = writeln!(self.manifest_extra, "numeric.selected_energies = {}", energies.len());

        if op.perturbed {
            let b = op.perturbation()?.expect("checked");
            let env = op.envelope()?;
            let mut csv = String::new();
            self.csv_header(&mut csv, "x,k,norm_ratio,det_ratio");
            let mut lo: f64 = f64::MAX;
            let mut hi: f64 = f64::MIN;
            let mut worst_cauchy: f64 = 0.0;
            for &x in &energies {
                let ratios = pk_comparison(x, &base, &b, op.kappa, &env, k_max)
                    .map_err(numeric("pk_comparison"))?;
                for r in &ratios {
                    lo = lo.min(r.norm_ratio).min(r.det_ratio);
                    hi = hi.max(r.norm_ratio).max(r.det_ratio);
                    let _ = writeln!(csv, "{x},{},{},{}", r.k, r.norm_ratio, r.det_ratio);
                }
                let late: Vec<_> = ratios.iter().filter(|r| r.k >= k_max / 2).collect();
                for pick in [0usize, 1] {
                    let vals: Vec<f64> = late
                        .iter()
                        .map(|r| if pick == 0 { r.norm_ratio } else { r.det_ratio })
                        .collect();
                    let maxv = vals.iter().cloned().fold(f64::MIN, f64::max);
                    let minv = vals.iter().cloned().fold(f64::MAX, f64::min);
                    worst_cauchy = worst_cauchy.max((maxv - minv) / vals[vals.len() - 1]);
                }
            }
            fs::write(self.path("pk_ratios.csv"), csv)?;
            self.check(
                "pk-ratio-confinement",
                lo >= ratio_min && hi <= ratio_max,
                format!(
                    "norm and det ratios in [{lo:.4}, {hi:.4}] within [{ratio_min}, {ratio_max}] for k <= {k_max} over {} energies (kappa = {})",
                    energies.len(),
                    op.kappa
                ),
            );
            self.check(
                "pk-ratio-cauchy",
                worst_cauchy <= cauchy_tol,
                format!(
                    "worst spread {worst_cauchy:.5} <= {cauchy_tol} over k in [{}, {k_max}]",
                    k_max / 2
                ),
            );
        }

        if self.cfg.bool("numeric", "jl_bracket", false)? {
            let spec = op.full_spec()?;
            let jl_min = self.cfg.f64("numeric", "jl_ratio_min", 0.1)?;
            let jl_max = self.cfg.f64("numeric", "jl_ratio_max", 10.0)?;
            let mut csv = String::new();
            self.csv_header(&mut csv, "x,k,ratio,psi,eps_k,pk_norm");
            let mut lo: f64 = f64::MAX;
            let mut hi: f64 = f64::MIN;
            let ks: Vec<usize> = (1..=8).map(|i| (i * k_max / 8).max(1)).collect();
            for &x in &energies {
                for &k in &ks {
                    let b = jl_bracket(x, &spec, k).map_err(numeric("jl_bracket"))?;
                    lo = lo.min(b.ratio);
                    hi = hi.max(b.ratio);
                    let _ = writeln!(csv, "{x},{k},{},{},{},{}", b.ratio, b.psi, b.eps_k, b.pk_norm);
                }
            }
            fs::write(self.path("jl_bracket.csv"), csv)?;
            self.check(
                "jl-bracket-confinement",
                lo >= jl_min && hi <= jl_max,
                format!("ratios in [{lo:.4}, {hi:.4}] within [{jl_min}, {jl_max}] for k multiples of {}", k_max / 8),
            );
            let psi_i = psi_sup(num_complex::Complex64::new(0.0, 1.0))
                .map_err(numeric("psi_sup"))?;
            self.check(
                "psi-fixes-i",
                (psi_i - 1.0).abs() < 1e-6,
                format!("psi(i) = {psi_i}"),
            );
        }
        Ok(())
    }

    // ----- diophantine ----------------------------------------------------

    fn run_diophantine(&mut self) -> Result<(), RunError> {
        let op = OperatorConfig::resolve(&self.cfg)?;
        let eta = self.cfg.f64("numeric", "dc_eta", 0.2)?;
        let tau = self.cfg.f64("numeric", "dc_tau", 1.0)?;
        let n_max = self.cfg.u64("numeric", "dc_n_max", 100_000)?.max(1);
        let params = DiophantineParams::new(eta, tau, op.alpha)
            .map_err(|e| RunError::Config(format!("[numeric] diophantine: {e}")))?;
        let report = diophantine_check(&params, n_max);

        // record-setting denominators: running minima of the margin
        let mut csv = String::new();
        self.csv_header(&mut csv, "n,gap,bound,margin");
        let mut best = f64::INFINITY;
        for n in 1..=n_max {
            let na = n as f64 * op.alpha;
            let gap = (na - na.round()).abs();
            let bound = eta / (n as f64).powf(tau);
            let margin = gap / bound;
            if margin < best {
                best = margin;
                let _ = writeln!(csv, "{n},{gap},{bound},{margin}");
            }
        }
        fs::write(self.path("diophantine.csv"), csv)?;

        let _ = writeln!(self.manifest_extra, "numeric.dc_eta = {eta}");
        let _ = writeln!(self.manifest_extra, "numeric.dc_tau = {tau}");
        let _ = writeln!(self.manifest_extra, "numeric.dc_n_max = {n_max}");
        let _ = writeln!(self.manifest_extra, "operator.alpha = {}", op.alpha);
        self.check(
            "diophantine-condition",
            report.holds,
            format!(
                "|n*alpha - j| > {eta}/n^{tau} holds up to n = {n_max}: {} (worst n = {}, gap = {:.6e}, margin = {:.4})",
                report.holds, report.worst_n, report.worst_gap, report.worst_margin
            ),
        );
        Ok(())
    }

    // ----- outputs ---------------------------------------------------------

    fn write_manifest(&self) -> Result<(), RunError> {
        let mut out = String::new();
        let _ = writeln!(out, "# spectral-lab manifest");
        let _ = writeln!(out, "version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "experiment = {}", self.kind.name());
        let _ = writeln!(out, "config_sha256 = {}", self.digest);
        let _ = writeln!(out, "\n[config]");
        for (s, k, v) in self.cfg.resolved_entries() {
            let _ = writeln!(out, "{s}.{k} = {v}");
        }
        let _ = writeln!(out, "\n[resolved]");
        out.push_str(&self.manifest_extra);
        fs::write(self.path("manifest.txt"), out)?;
        Ok(())
    }

    fn write_verdicts(&self) -> Result<(), RunError> {
        let mut out = String::new();
        let _ = writeln!(out, "# spectral-lab verdicts ({})", self.kind.name());
        let _ = writeln!(out, "# config_sha256 = {}", self.digest);
        for v in &self.verdicts {
            let _ = writeln!(out, "{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.details);
        }
        fs::write(self.path("verdict.txt"), out)?;
        Ok(())
    }
}

/// Energies with bounded Cesàro means, spread across `[e_min, e_max]` by
/// stride over the survivors; the boundedness of `(1/L)Σ‖T‖²` is the
/// numeric proxy for "inside the essential support".
pub fn in_spectrum_energies(
    spec: &PotentialSpec,
    count: usize,
    e_min: f64,
    e_max: f64,
    l: usize,
) -> spectral_lab::Result<Vec<f64>> {
    let candidates = 16 * count;
    let mut survivors = Vec::new();
    for i in 0..candidates {
        let x = e_min + (e_max - e_min) * (i as f64 + 0.5) / candidates as f64;
        match last_simon_diagnostics(x, spec, l) {
            Ok(d) if d.cesaro <= 100.0 => survivors.push(x),
            _ => {}
        }
    }
    if survivors.len() < count {
        return Ok(survivors);
    }
    let stride = survivors.len() / count;
    Ok((0..count).map(|i| survivors[i * stride]).collect())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn closed_form_mass(beta: f64, window: (f64, f64)) -> f64 {
    let n = 200_000;
    let theta_lo = (window.1 / 2.0).acos();
    let theta_hi = (window.0 / 2.0).acos();
    let h = (theta_hi - theta_lo) / n as f64;
    (0..n)
        .map(|j| {
            let t = theta_lo + (j as f64 + 0.5) * h;
            let x = 2.0 * t.cos();
            free_density(x, beta).unwrap() * 2.0 * t.sin() * h
        })
        .sum()
}

/// Smooth compactly supported test function `exp(-1/(1-u²))` rescaled.
pub struct Bump {
    pub center: f64,
    pub half_width: f64,
}

impl Bump {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.half_width;
        if u.abs() >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - u * u)).exp()
        }
    }

    /// `∫ bump·ρ_β dx` by dense quadrature of the closed-form density.
    pub fn integral_against_density(&self, beta: f64) -> f64 {
        let n = 100_000;
        let lo = self.center - self.half_width;
        let hi = self.center + self.half_width;
        let h = (hi - lo) / n as f64;
        (0..n)
            .map(|j| {
                let x = lo + (j as f64 + 0.5) * h;
                self.eval(x) * free_density(x, beta).unwrap() * h
            })
            .sum()
    }
}

/// The five fixed bumps used by weak-integral comparisons.
pub fn bump_suite() -> Vec<Bump> {
    [-1.2, -0.6, 0.0, 0.6, 1.2]
        .iter()
        .map(|&center| Bump { center, half_width: 0.5 })
        .collect()
}
