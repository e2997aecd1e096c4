use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};

use uep_fec_cli::{
    cmd_compare, cmd_counts, cmd_histogram, cmd_optimize, cmd_sweep, CliError, CmdOutputs,
    EvaluatorMode, ExperimentSpec, RunOptions,
};

#[derive(Parser)]
#[command(
    name = "uep-fec-cli",
    about = "Experiment harness for unequal-error-protection FEC optimization"
)]
struct Cli {
    /// Experiment spec as JSON; defaults describe an 8 Mbps, 200 ms scenario.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Replaces the spec's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    evaluator: Option<EvaluatorMode>,
    /// Monte Carlo trials per estimate.
    #[arg(long)]
    trials: Option<u64>,
    /// Neighborhood fraction sampled per outer iteration.
    #[arg(long)]
    tau: Option<f64>,
    /// Outer iteration cap per subproblem.
    #[arg(long)]
    imax: Option<u64>,
    /// Simulated wall time charged per cost evaluation, in microseconds.
    #[arg(long, default_value_t = 2.0)]
    tick_us: f64,
    /// Measure with the real clock; output is then no longer byte-stable.
    #[arg(long)]
    real_clock: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solution-space sizes per matrix count.
    Counts,
    /// Exhaustive oracles vs the annealer on one block.
    Compare,
    /// Optimize every block of a synthesized stream; timing aggregates.
    Optimize,
    /// Strategy comparison over the loss-rate/burst-length grid.
    Sweep,
    /// Matrix-count histogram of winning configs along a stream.
    Histogram,
}

fn run(cli: &Cli) -> Result<CmdOutputs, CliError> {
    let mut spec = match &cli.spec {
        Some(path) => ExperimentSpec::from_json(&std::fs::read_to_string(path)?)?,
        None => ExperimentSpec::default(),
    };
    if let Some(seed) = cli.seed {
        spec.seeds = vec![seed];
    }
    let opts = RunOptions {
        evaluator: cli.evaluator,
        trials: cli.trials,
        tau: cli.tau,
        imax: cli.imax,
        tick: Duration::from_secs_f64(cli.tick_us * 1e-6),
        real_clock: cli.real_clock,
        ..RunOptions::default()
    };
    match cli.command {
        Command::Counts => cmd_counts(&spec),
        Command::Compare => cmd_compare(&spec, &opts),
        Command::Optimize => cmd_optimize(&spec, &opts),
        Command::Sweep => cmd_sweep(&spec, &opts),
        Command::Histogram => cmd_histogram(&spec, &opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outputs = match run(&cli) {
        Ok(outputs) => outputs,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(err) = std::fs::create_dir_all(&cli.out_dir) {
        eprintln!("error: cannot create {}: {err}", cli.out_dir.display());
        return ExitCode::FAILURE;
    }
    for (name, contents) in &outputs.files {
        let path = cli.out_dir.join(name);
        if let Err(err) = std::fs::write(&path, contents) {
            eprintln!("error: cannot write {}: {err}", path.display());
            return ExitCode::FAILURE;
        }
        println!("wrote {}", path.display());
    }
    for failure in &outputs.guard_failures {
        eprintln!("guard failed: {failure}");
    }
    if outputs.guard_failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
