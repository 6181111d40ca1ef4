use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use peakguard::commands::{run_command, Overrides};
use peakguard::{exit_code, ERROR_EXIT};

/// Attack-robustness analysis, observer design and simulation studies for
/// linear state estimators with a residual detector.
///
/// Exit codes: 0 success (or attack-robust for `analyze`), 1 not
/// attack-robust, 2 error. Log verbosity follows PEAKGUARD_LOG
/// (error, warn, info, debug, trace).
#[derive(Parser, Debug)]
#[command(name = "peakguard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Error bounds, detector threshold and the attack-robustness verdict.
    Analyze(Common),
    /// Attack-aware observer synthesis for one or more weights β.
    Design(Common),
    /// Nominal and attacked closed-loop runs with trace CSVs and an SVG.
    Simulate(Common),
    /// Batch studies over random systems (pareto, conservatism, false-alarm).
    Experiment(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON project configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated design weights.
    #[arg(long, value_delimiter = ',')]
    beta: Option<Vec<f64>>,
    /// Worker threads for batch studies.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PEAKGUARD_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(ERROR_EXIT) } else { ExitCode::SUCCESS };
        }
    };
    let (name, common) = match &cli.command {
        Command::Analyze(c) => ("analyze", c),
        Command::Design(c) => ("design", c),
        Command::Simulate(c) => ("simulate", c),
        Command::Experiment(c) => ("experiment", c),
    };
    let ov = Overrides { out: common.out.clone(), seed: common.seed, betas: common.beta.clone(), jobs: common.jobs };
    let result = run_command(name, &common.config, &ov);
    if let Err(e) = &result {
        eprintln!("peakguard {name}: {e}");
    }
    exit_code(&result)
}
