use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tvpar::checks::{self, CheckResult};
use tvpar::experiment::config::parse_execution;
use tvpar::experiment::{run_experiment, ExperimentConfig};
use tvpar::solvers::Variant;
use tvpar::TvError;

const EXIT_INVALID: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

// `println!` panics when stdout is a closed pipe (`tvpar run | head`).
macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

/// TV-regularized reconstruction with the parallel proximal algorithm.
#[derive(Debug, Parser)]
#[command(name = "tvpar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the Shepp-Logan reconstruction experiment.
    Run(RunArgs),
    /// Check the proximal operators against their oracles.
    ProxCheck(CheckArgs),
    /// Check the frame identities on random grids.
    FrameCheck(CheckArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// key=value config file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Phantom side length n (even); the image is n×n.
    #[arg(long)]
    size: Option<usize>,
    /// Number of Gaussian measurements M.
    #[arg(long)]
    measurements: Option<usize>,
    /// Measurement noise level in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// TV weight λ.
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated c values, one run per step γ = c/L.
    #[arg(long, value_delimiter = ',')]
    step_fractions: Option<Vec<f64>>,
    /// Iterations per step-fraction run.
    #[arg(long)]
    iterations: Option<usize>,
    /// Comma-separated solver names.
    #[arg(long, value_delimiter = ',')]
    solver: Option<Vec<Variant>>,
    /// Iterations of the run that fixes C* and the TV reference.
    #[arg(long)]
    reference_iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Run the step-fraction configurations concurrently.
    #[arg(long)]
    concurrent: bool,
    /// serial or parallel evaluation of the per-iteration proximals.
    #[arg(long)]
    execution: Option<String>,
    /// Record wall-clock time per iteration (makes CSVs non-reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Random cases per check.
    #[arg(long, default_value_t = 20)]
    cases: usize,
}

fn main() -> ExitCode {
    ExitCode::from(cli_main(std::env::args_os()))
}

fn cli_main(argv: impl IntoIterator<Item = OsString>) -> u8 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::ProxCheck(a) => report_checks(checks::prox_check(a.seed, a.cases)),
        Command::FrameCheck(a) => report_checks(checks::frame_check(a.seed, a.cases)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &TvError) -> u8 {
    match e {
        TvError::NumericalFailure { .. } | TvError::Oracle(_) => EXIT_NUMERICAL,
        _ => EXIT_INVALID,
    }
}

fn report_checks(results: tvpar::Result<Vec<CheckResult>>) -> tvpar::Result<u8> {
    let results = results?;
    for r in &results {
        say!("{}", r.line());
    }
    Ok(if results.iter().all(|r| r.passed) { 0 } else { EXIT_NUMERICAL })
}

fn build_config(args: RunArgs) -> tvpar::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    macro_rules! set {
        ($($field:ident <- $value:expr),* $(,)?) => {
            $(if let Some(v) = $value { cfg.$field = v; })*
        };
    }
    set!(
        size <- args.size,
        measurements <- args.measurements,
        snr_db <- args.snr_db,
        lambda <- args.lambda,
        step_fractions <- args.step_fractions,
        iterations <- args.iterations,
        solvers <- args.solver,
        reference_iterations <- args.reference_iterations,
        seed <- args.seed,
        out_dir <- args.out_dir,
    );
    if let Some(e) = &args.execution {
        cfg.execution = parse_execution(e)?;
    }
    cfg.concurrent_runs |= args.concurrent;
    cfg.timing |= args.timing;
    if let Ok(v) = std::env::var("TVPAR_THREADS") {
        cfg.threads = v
            .trim()
            .parse()
            .map_err(|_| TvError::InvalidArgument(format!("TVPAR_THREADS must be a count, got {v:?}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> tvpar::Result<u8> {
    let cfg = build_config(args)?;
    let report = run_experiment(&cfg)?;
    say!(
        "L = {:.6e} ({}), measurement SNR = {:.2} dB",
        report.lipschitz.value,
        if report.lipschitz.converged { "converged" } else { "not converged" },
        report.measurement_snr_db
    );
    say!(
        "C* = {:.16e}; reference SNR = {:.2} dB",
        report.cstar, report.reference.snr_vs_phantom
    );
    for r in &report.runs {
        say!(
            "{:<32} final gap {:.3e}  SNR {:.2} dB  rel. l2 to reference {:.3e}",
            r.label,
            r.final_gap(),
            r.snr_vs_phantom,
            r.relative_l2_vs_reference
        );
    }
    say!("wrote {} files to {}", report.files.len(), cfg.out_dir.display());
    Ok(0)
}
