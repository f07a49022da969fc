//! Shepp-Logan reconstruction from Gaussian measurements.
//!
//! [`run_experiment`] builds the phantom, draws `H` and the noise, estimates
//! `L`, runs the reference solver that fixes `C*` and the TV reference
//! solution, then runs every configured solver at every step fraction.
//! All randomness comes from streams derived from the configured seed, so a
//! given configuration always produces the same bytes on disk.

pub mod config;
pub mod phantom;
pub mod plot;

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Result, TvError};
use crate::exec::{self, Execution};
use crate::frame::ShiftedHaarFrame;
use crate::grid::SignalGrid;
use crate::io;
use crate::metrics;
use crate::operators::{
    self, DenseOperator, LinearOperator, LipschitzEstimate, DEFAULT_LIPSCHITZ_MAX_ITER,
    DEFAULT_LIPSCHITZ_TOL,
};
use crate::rng::SeededRng;
use crate::solvers::records::{write_records_csv, IterationRecord};
use crate::solvers::{self, fill_gaps, ProblemInstance, RunOutput, SolverConfig, Variant};

pub use config::ExperimentConfig;
pub use phantom::shepp_logan;
pub use plot::emit_gap_plot;

const STREAM_OPERATOR: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_POWER: u64 = 3;

/// The measurement setup shared by every run of an experiment.
#[derive(Debug, Clone)]
pub struct Problem {
    pub phantom: SignalGrid,
    pub operator: Arc<DenseOperator>,
    /// Realized SNR of the noisy measurements (equals the configured value up
    /// to rounding).
    pub measurement_snr_db: f64,
    pub lipschitz: LipschitzEstimate,
    pub instance: ProblemInstance,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    cfg.validate()?;
    let phantom = shepp_logan(cfg.size)?;
    let n = phantom.len();
    let mut op_rng = SeededRng::derive(cfg.seed, STREAM_OPERATOR);
    let op = Arc::new(operators::sample_gaussian_operator(cfg.measurements, n, &mut op_rng)?);
    let clean = op.apply(phantom.data())?;
    let (noisy, noise) = metrics::add_awgn(&clean, cfg.snr_db, &mut SeededRng::derive(cfg.seed, STREAM_NOISE))?;
    let lipschitz = operators::lipschitz_constant(
        op.as_ref(),
        DEFAULT_LIPSCHITZ_TOL,
        DEFAULT_LIPSCHITZ_MAX_ITER,
        &mut SeededRng::derive(cfg.seed, STREAM_POWER),
    )?;
    if !(lipschitz.value > 0.0) {
        return Err(TvError::invalid("measurement operator is zero"));
    }
    let dyn_op: Arc<dyn LinearOperator> = op.clone();
    let instance = ProblemInstance::new(dyn_op, noisy, cfg.lambda, ShiftedHaarFrame::new(phantom.dims())?)?;
    Ok(Problem {
        measurement_snr_db: metrics::measured_snr_db(&clean, &noise),
        phantom,
        operator: op,
        lipschitz,
        instance,
    })
}

/// Solver settings for the run that fixes `C*`: step `1/L`.
pub fn reference_config(cfg: &ExperimentConfig, lipschitz: f64) -> SolverConfig {
    let mut s = SolverConfig::new(cfg.reference_solver, 1.0 / lipschitz, cfg.reference_iterations);
    s.inner_iters = cfg.inner_iters;
    s.inner_tol = cfg.inner_tol;
    s.warm_start = cfg.warm_start;
    s.execution = cfg.execution;
    s.timing = cfg.timing;
    s
}

fn run_config(cfg: &ExperimentConfig, variant: Variant, fraction: f64, lipschitz: f64) -> SolverConfig {
    let mut s = SolverConfig::new(variant, fraction / lipschitz, cfg.iterations);
    s.inner_iters = cfg.inner_iters;
    s.inner_tol = cfg.inner_tol;
    s.warm_start = cfg.warm_start;
    s.execution = cfg.execution;
    s.timing = cfg.timing;
    s
}

#[derive(Debug, Clone)]
pub struct ReferenceReport {
    pub records: Vec<IterationRecord>,
    pub solution: SignalGrid,
    pub final_cost: f64,
    pub snr_vs_phantom: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub variant: Variant,
    pub fraction: f64,
    pub step: f64,
    /// File-name stem, `<variant>_<fraction>`.
    pub label: String,
    pub records: Vec<IterationRecord>,
    pub solution: SignalGrid,
    pub final_cost: f64,
    pub snr_vs_phantom: f64,
    pub snr_vs_reference: f64,
    /// `‖x − x_ref‖ / ‖x_ref‖`.
    pub relative_l2_vs_reference: f64,
    /// `(C(x) − C(x_ref)) / C(x_ref)`.
    pub cost_gap_vs_reference: f64,
}

impl RunReport {
    pub fn final_gap(&self) -> f64 {
        self.records
            .last()
            .and_then(|r| r.relative_gap)
            .unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub lipschitz: LipschitzEstimate,
    pub measurement_snr_db: f64,
    /// Minimum cost seen in any run, reference included.
    pub cstar: f64,
    pub reference: ReferenceReport,
    pub runs: Vec<RunReport>,
    /// Files written to the output directory, sorted.
    pub files: Vec<String>,
}

impl ExperimentReport {
    pub fn run(&self, variant: Variant, fraction: f64) -> Option<&RunReport> {
        self.runs
            .iter()
            .find(|r| r.variant == variant && r.fraction == fraction)
    }
}

pub fn run_label(variant: Variant, fraction: f64) -> String {
    format!("{variant}_{fraction}")
}

/// Runs the whole pipeline and writes every artifact into `cfg.out_dir`.
///
/// On failure the files produced so far are kept and `manifest.txt` records
/// `status=failed` with the error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut files = Vec::new();
    let result = exec::with_thread_cap(cfg.threads, || run_pipeline(cfg, &mut files));
    if let Err(e) = &result {
        // Best effort: the original error is what the caller needs.
        let _ = write_manifest(cfg, &mut files, &format!("failed\nerror={e}"), "");
    }
    result
}

fn run_pipeline(cfg: &ExperimentConfig, files: &mut Vec<String>) -> Result<ExperimentReport> {
    let out = cfg.out_dir.as_path();
    let problem = build_problem(cfg)?;
    let l = problem.lipschitz.value;
    save_image(out, "phantom", &problem.phantom, files)?;

    let reference = match solvers::run(&problem.instance, &reference_config(cfg, l), zeros(&problem)?, None) {
        Ok(r) => r,
        Err(fail) => {
            write_csv(out, "records_reference.csv", &fail.records, files)?;
            return Err(fail.error);
        }
    };

    let specs: Vec<(Variant, f64)> = cfg
        .solvers
        .iter()
        .flat_map(|&v| cfg.step_fractions.iter().map(move |&c| (v, c)))
        .collect();
    let schedule = if cfg.concurrent_runs {
        Execution::Parallel
    } else {
        Execution::Serial
    };
    let x0 = zeros(&problem)?;
    let outputs = exec::map_indices(specs.len(), schedule, |i| {
        let (variant, fraction) = specs[i];
        solvers::run(&problem.instance, &run_config(cfg, variant, fraction, l), x0.clone(), None)
    });

    let mut cstar = reference.min_cost();
    for o in outputs.iter().flatten() {
        cstar = cstar.min(o.min_cost());
    }

    let mut ref_records = reference.records.clone();
    fill_gaps(&mut ref_records, cstar);
    write_csv(out, "records_reference.csv", &ref_records, files)?;
    let ref_solution = reference.state.x.clone();
    save_image(out, "reference", &ref_solution, files)?;
    let reference_report = ReferenceReport {
        final_cost: reference.final_cost(),
        snr_vs_phantom: metrics::snr_db(&problem.phantom, &ref_solution)?,
        records: ref_records,
        solution: ref_solution,
    };

    let mut runs = Vec::with_capacity(specs.len());
    let mut first_error = None;
    for (&(variant, fraction), output) in specs.iter().zip(outputs) {
        let label = run_label(variant, fraction);
        match output {
            Ok(o) => runs.push(finish_run(out, &problem, &reference_report, cstar, variant, fraction, label, o, files)?),
            Err(mut fail) => {
                fill_gaps(&mut fail.records, cstar);
                write_csv(out, &format!("records_{label}.csv"), &fail.records, files)?;
                first_error.get_or_insert(fail.error);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }

    let multi = cfg.solvers.len() > 1;
    let legends: Vec<String> = runs
        .iter()
        .map(|r| {
            let f = plot::fraction_label(r.fraction);
            if multi {
                format!("{} {f}", r.variant)
            } else {
                f
            }
        })
        .collect();
    let series: Vec<plot::Series<'_>> = runs
        .iter()
        .zip(&legends)
        .map(|(r, label)| plot::Series {
            label,
            records: &r.records,
        })
        .collect();
    emit_gap_plot(&series, &out.join("gap.svg"))?;
    files.push("gap.svg".into());

    let mut results = String::new();
    let _ = writeln!(results, "lipschitz={:.16e}", l);
    let _ = writeln!(results, "lipschitz_converged={}", problem.lipschitz.converged);
    let _ = writeln!(results, "measurement_snr_db={:.16e}", problem.measurement_snr_db);
    let _ = writeln!(results, "cstar={:.16e}", cstar);
    let _ = writeln!(results, "reference_final_cost={:.16e}", reference_report.final_cost);
    let _ = writeln!(results, "reference_snr_db={:.16e}", reference_report.snr_vs_phantom);
    for r in &runs {
        let _ = writeln!(
            results,
            "run.{}: final_gap={:.16e} snr_db={:.16e} relative_l2_vs_reference={:.16e} cost_gap_vs_reference={:.16e}",
            r.label,
            r.final_gap(),
            r.snr_vs_phantom,
            r.relative_l2_vs_reference,
            r.cost_gap_vs_reference
        );
    }
    write_manifest(cfg, files, "ok", &results)?;

    Ok(ExperimentReport {
        config: cfg.clone(),
        lipschitz: problem.lipschitz,
        measurement_snr_db: problem.measurement_snr_db,
        cstar,
        reference: reference_report,
        runs,
        files: files.clone(),
    })
}

#[allow(clippy::too_many_arguments)]
fn finish_run(
    out: &Path,
    problem: &Problem,
    reference: &ReferenceReport,
    cstar: f64,
    variant: Variant,
    fraction: f64,
    label: String,
    output: RunOutput,
    files: &mut Vec<String>,
) -> Result<RunReport> {
    let mut records = output.records;
    fill_gaps(&mut records, cstar);
    write_csv(out, &format!("records_{label}.csv"), &records, files)?;
    let solution = output.state.x;
    save_image(out, &format!("solution_{label}"), &solution, files)?;
    let final_cost = records.last().map_or(f64::NAN, |r| r.cost);
    Ok(RunReport {
        variant,
        fraction,
        step: fraction / problem.lipschitz.value,
        snr_vs_phantom: metrics::snr_db(&problem.phantom, &solution)?,
        snr_vs_reference: metrics::snr_db(&reference.solution, &solution)?,
        relative_l2_vs_reference: metrics::relative_l2(&solution, &reference.solution)?,
        cost_gap_vs_reference: (final_cost - reference.final_cost) / reference.final_cost,
        final_cost,
        label,
        records,
        solution,
    })
}

fn zeros(problem: &Problem) -> Result<SignalGrid> {
    SignalGrid::zeros(problem.phantom.dims())
}

fn write_csv(out: &Path, name: &str, records: &[IterationRecord], files: &mut Vec<String>) -> Result<()> {
    let mut w = BufWriter::new(File::create(out.join(name))?);
    write_records_csv(&mut w, records)?;
    files.push(name.to_string());
    Ok(())
}

fn save_image(out: &Path, stem: &str, grid: &SignalGrid, files: &mut Vec<String>) -> Result<()> {
    let grid_name = format!("{stem}.tvgrid");
    let pgm_name = format!("{stem}.pgm");
    io::save_grid(&out.join(&grid_name), grid)?;
    io::save_pgm(&out.join(&pgm_name), grid)?;
    files.push(grid_name);
    files.push(pgm_name);
    Ok(())
}

fn write_manifest(cfg: &ExperimentConfig, files: &mut Vec<String>, status: &str, results: &str) -> Result<()> {
    if !files.iter().any(|f| f == "manifest.txt") {
        files.push("manifest.txt".into());
    }
    files.sort();
    let mut s = String::new();
    let _ = writeln!(s, "# tvpar experiment manifest");
    let _ = writeln!(s, "status={status}");
    let _ = writeln!(s, "\n[config]");
    s.push_str(&cfg.echo());
    if !results.is_empty() {
        let _ = writeln!(s, "\n[results]");
        s.push_str(results);
    }
    let _ = writeln!(s, "\n[files]");
    for f in files.iter() {
        let _ = writeln!(s, "{f}");
    }
    std::fs::write(cfg.out_dir.join("manifest.txt"), s)?;
    Ok(())
}
