use std::path::PathBuf;
use std::process::ExitCode;

use bvs_harness::{parse_config, run_experiment, ConfigError, ExperimentConfig, ExperimentKind, RunOptions};
use clap::{Args, Parser, Subcommand};

const EXIT_RUN_ERROR: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser)]
#[command(name = "bvs", version, about = "Bayesian variable selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate, fit and score replicated data sets at one (n, K).
    Fit(RunArgs),
    /// Replicate the no-selection counterexample against its tail bound.
    Counterexample(RunArgs),
    /// Fit over an n-grid and regress ln(median distance) on ln n.
    RateSweep(RunArgs),
    /// Evaluate the rate conditions over an n-grid.
    Audit(RunArgs),
    /// Neighborhood selection on a chain-graph truth.
    Graph(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config. Optional for `audit` and `counterexample`,
    /// which have built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Replicate count (overrides the config).
    #[arg(long)]
    replicates: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Exit with status 3 when the experiment's acceptance check fails.
    #[arg(long)]
    check: bool,
}

fn load(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => ExperimentConfig::builtin(kind)
            .ok_or_else(|| ConfigError::new("--config", format!("required for {}", kind.name())))?,
    };
    if cfg.experiment != kind {
        return Err(ConfigError::new(
            "experiment",
            format!("config describes {}, not {}", cfg.experiment.name(), kind.name()),
        ));
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if args.threads == Some(0) {
        return Err(ConfigError::new("--threads", "must be at least 1"));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Fit(a) => (ExperimentKind::Fit, a),
        Command::Counterexample(a) => (ExperimentKind::Counterexample, a),
        Command::RateSweep(a) => (ExperimentKind::RateSweep, a),
        Command::Audit(a) => (ExperimentKind::Audit, a),
        Command::Graph(a) => (ExperimentKind::Graph, a),
    };
    let cfg = match load(kind, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("bvs: config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let opts = RunOptions { threads: args.threads };
    match run_experiment(&cfg, &opts) {
        Ok(report) => {
            println!(
                "{} {} -> {} ({} files)",
                kind.name(),
                report.config_hash,
                report.out.display(),
                report.files.len() + 1
            );
            let status = if report.check.passed { "PASS" } else { "FAIL" };
            println!("check {status}: {}", report.check.detail);
            if args.check && !report.check.passed {
                ExitCode::from(EXIT_CHECK)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) if e.is_config() => {
            eprintln!("bvs: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("bvs: run failed: {e}");
            ExitCode::from(EXIT_RUN_ERROR)
        }
    }
}
