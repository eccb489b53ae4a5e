//! `qlab`: sweeps, case covers and counterexample checks for semiclassical
//! sup-norm estimates.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod svg;

use commands::Outcome;
use config::{parse_k_range, read_config_file, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "qlab", version, about = "Sup-norm scaling experiments for semiclassical quasimodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scaling sweep over dyadic h and fit the sup-norm exponent.
    Sweep(Flags),
    /// Check normalization and cover the unit ball by case balls.
    Classify(Flags),
    /// Evaluate the indefinite-metric counterexample per h.
    Counterexample(Flags),
    /// Build flat-torus spectral clusters with the eigensolver.
    Cluster(Flags),
    /// Quick invariant checks.
    Verify(Flags),
}

#[derive(Args, Default)]
struct Flags {
    /// Experiment name (sweep only).
    #[arg(long)]
    experiment: Option<String>,
    /// Dyadic exponents `MIN..MAX` (h = 2^-k), or a single k.
    #[arg(long, value_parser = parse_k_range)]
    k: Option<(u32, u32)>,
    /// Grid points per side.
    #[arg(long)]
    grid: Option<usize>,
    /// Window constant C in |E| <= C h.
    #[arg(long)]
    cluster_width: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (forced to 1 by QLAB_DETERMINISTIC=1).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Operator backend: spectral or fd.
    #[arg(long)]
    backend: Option<String>,
    /// Builtin potential: zero, linear, quadratic-well, saddle.
    #[arg(long)]
    potential: Option<String>,
    /// Polynomial coefficients in graded order 1, x1, x2, x1^2, x1 x2, x2^2, ...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    coefficients: Option<Vec<f64>>,
    /// Counterexample sum range: full or restricted.
    #[arg(long)]
    range: Option<String>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            experiment: self.experiment.clone(),
            k: self.k,
            grid: self.grid,
            cluster_width: self.cluster_width,
            out: self.out.clone(),
            seed: self.seed,
            backend: self.backend.clone(),
            workers: self.workers,
            potential: self.potential.clone(),
            coefficients: self.coefficients.clone(),
            range: self.range.clone(),
        }
    }
}

fn default_k(command: &str, experiment: Option<&str>) -> (u32, u32) {
    match command {
        "sweep" => experiment.and_then(|e| e.parse::<qlab_core::sweep::Experiment>().ok()).map_or((4, 12), |e| e.default_k_range()),
        "classify" => (8, 8),
        "counterexample" => (6, 16),
        "cluster" => (2, 3),
        _ => (4, 4),
    }
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let (name, flags) = match &cli.command {
        Command::Sweep(f) => ("sweep", f),
        Command::Classify(f) => ("classify", f),
        Command::Counterexample(f) => ("counterexample", f),
        Command::Cluster(f) => ("cluster", f),
        Command::Verify(f) => ("verify", f),
    };
    let file = match &flags.config {
        Some(path) => read_config_file(path)?,
        None => Overrides::default(),
    };
    let merged = file.then(flags.overrides());
    let k = default_k(name, merged.experiment.as_deref());
    let cfg = RunConfig::resolve(name, k, merged);
    match cli.command {
        Command::Sweep(_) => commands::cmd_sweep(&cfg),
        Command::Classify(_) => commands::cmd_classify(&cfg),
        Command::Counterexample(_) => commands::cmd_counterexample(&cfg),
        Command::Cluster(_) => commands::cmd_cluster(&cfg),
        Command::Verify(_) => commands::cmd_verify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::CertificateFailure) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            eprintln!("run `qlab --help` for usage");
            ExitCode::from(1)
        }
    }
}
