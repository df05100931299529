//! `spectral-lab`: config-driven experiments on discrete Schrödinger
//! operators under exponentially decaying perturbations.
//!
//! Each subcommand reads a flat `key = value` config, runs one named
//! experiment, and writes data CSVs, a PASS/FAIL verdict file, and a
//! manifest echoing the resolved configuration. Outputs are byte-for-byte
//! reproducible for a fixed config, independent of the thread count.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod experiments;

use experiments::{ExperimentKind, RunError, Runner};

#[derive(Parser)]
#[command(name = "spectral-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    experiment: Experiment,
}

#[derive(Subcommand)]
enum Experiment {
    /// Spectral-measure approximation vs the closed-form density.
    Density(RunArgs),
    /// Dyadic Hölder moduli and measure domination.
    Holder(RunArgs),
    /// Time-averaged return probability and decay-regime fits.
    Dynamics(RunArgs),
    /// Transfer-matrix norm sandwich and expansion residuals.
    Asymptotics(RunArgs),
    /// P_k ratio confinement and the m-function bracket.
    Pk(RunArgs),
    /// Diophantine verification of a frequency.
    Diophantine(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Path to the flat key = value config file.
    #[arg(long)]
    config: PathBuf,
    /// Output path prefix; files are written as <prefix>_<name>.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.experiment {
        Experiment::Density(a) => (ExperimentKind::Density, a),
        Experiment::Holder(a) => (ExperimentKind::Holder, a),
        Experiment::Dynamics(a) => (ExperimentKind::Dynamics, a),
        Experiment::Asymptotics(a) => (ExperimentKind::Asymptotics, a),
        Experiment::Pk(a) => (ExperimentKind::Pk, a),
        Experiment::Diophantine(a) => (ExperimentKind::Diophantine, a),
    };

    if let Some(threads) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("spectral-lab: could not configure {threads} threads: {e}");
            return ExitCode::from(1);
        }
    }

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("spectral-lab: cannot read config {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };

    match Runner::new(kind, &text, args.out.clone()).and_then(Runner::run) {
        Ok(all_pass) => {
            if !all_pass {
                eprintln!("spectral-lab: completed with FAIL verdicts (see verdict file)");
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Config(message)) => {
            eprintln!("spectral-lab: config error: {message}");
            ExitCode::from(2)
        }
        Err(RunError::Numeric { operation, source }) => {
            eprintln!("spectral-lab: numeric failure in {operation}: {source}");
            ExitCode::from(1)
        }
        Err(RunError::Io(e)) => {
            eprintln!("spectral-lab: io error: {e}");
            ExitCode::from(1)
        }
    }
}
