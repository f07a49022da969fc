//! Experiment configuration and its flat `key=value` text format.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Lists are comma separated. Keys are the field names of
//! [`ExperimentConfig`]; unknown keys are rejected so typos do not silently
//! fall back to defaults.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Result, TvError};
use crate::exec::Execution;
use crate::solvers::Variant;

/// Regularization weight shipped as the default. Chosen by
/// `cargo run --release --example lambda_sweep` as the value maximizing the
/// mean reconstruction SNR of the TV reference solution over several seeds.
pub const DEFAULT_LAMBDA: f64 = 0.003;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// The phantom is `size × size`.
    pub size: usize,
    pub measurements: usize,
    pub snr_db: f64,
    pub lambda: f64,
    /// Each entry `c` gives one run with step `γ = c/L`.
    pub step_fractions: Vec<f64>,
    pub solvers: Vec<Variant>,
    pub iterations: usize,
    /// Solver and budget for the run that fixes `C*` and the TV reference
    /// solution. Its step is always `1/L`.
    pub reference_solver: Variant,
    pub reference_iterations: usize,
    pub inner_iters: usize,
    pub inner_tol: f64,
    pub warm_start: bool,
    pub seed: u64,
    /// Run the step-fraction configurations concurrently.
    pub concurrent_runs: bool,
    /// Scheduling of the per-iteration proximals and mat-vecs.
    pub execution: Execution,
    /// Worker cap, 0 = library default.
    pub threads: usize,
    /// Fill the `wall_ms` CSV column. Off by default so outputs are
    /// byte-reproducible.
    pub timing: bool,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            size: 32,
            measurements: 512,
            snr_db: 30.0,
            lambda: DEFAULT_LAMBDA,
            step_fractions: vec![1.0, 0.25, 0.0625],
            solvers: vec![Variant::FastParallelProx],
            iterations: 500,
            reference_solver: Variant::FastIstaReference,
            reference_iterations: 2000,
            inner_iters: 2000,
            inner_tol: 1e-12,
            warm_start: false,
            seed: 7,
            concurrent_runs: false,
            execution: Execution::Parallel,
            threads: 0,
            timing: false,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size % 2 != 0 {
            return Err(TvError::invalid(format!(
                "even size required, got {}",
                self.size
            )));
        }
        if self.size < 8 {
            return Err(TvError::invalid(format!("size must be >= 8, got {}", self.size)));
        }
        if self.measurements == 0 {
            return Err(TvError::invalid("measurements must be >= 1"));
        }
        if !self.snr_db.is_finite() {
            return Err(TvError::invalid("snr_db must be finite"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(TvError::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.step_fractions.is_empty() {
            return Err(TvError::invalid("step_fractions must not be empty"));
        }
        if let Some(c) = self.step_fractions.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
            return Err(TvError::invalid(format!("step fractions must be > 0, got {c}")));
        }
        if self.solvers.is_empty() {
            return Err(TvError::invalid("solvers must not be empty"));
        }
        if self.iterations == 0 || self.reference_iterations == 0 || self.inner_iters == 0 {
            return Err(TvError::invalid("iteration counts must be >= 1"));
        }
        if !(self.inner_tol >= 0.0) {
            return Err(TvError::invalid("inner_tol must be >= 0"));
        }
        Ok(())
    }

    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "size" => self.size = parse(key, value)?,
            "measurements" => self.measurements = parse(key, value)?,
            "snr_db" => self.snr_db = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "step_fractions" => self.step_fractions = parse_list(key, value)?,
            "solvers" => self.solvers = parse_list(key, value)?,
            "iterations" => self.iterations = parse(key, value)?,
            "reference_solver" => self.reference_solver = parse(key, value)?,
            "reference_iterations" => self.reference_iterations = parse(key, value)?,
            "inner_iters" => self.inner_iters = parse(key, value)?,
            "inner_tol" => self.inner_tol = parse(key, value)?,
            "warm_start" => self.warm_start = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "concurrent_runs" => self.concurrent_runs = parse(key, value)?,
            "execution" => self.execution = parse_execution(value)?,
            "threads" => self.threads = parse(key, value)?,
            "timing" => self.timing = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(TvError::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every assignment in `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                TvError::invalid(format!("config line {}: expected key=value", lineno + 1))
            })?;
            self.set(key, value)
                .map_err(|e| TvError::invalid(format!("config line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Every setting that influences results, one `key=value` per line.
    ///
    /// `out_dir`, `threads`, `concurrent_runs` and `execution` are left out:
    /// they change where and how the work runs, not what it produces.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let list = |v: &[String]| v.join(",");
        let _ = writeln!(s, "size={}", self.size);
        let _ = writeln!(s, "measurements={}", self.measurements);
        let _ = writeln!(s, "snr_db={}", self.snr_db);
        let _ = writeln!(s, "lambda={}", self.lambda);
        let fr: Vec<String> = self.step_fractions.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(s, "step_fractions={}", list(&fr));
        let sv: Vec<String> = self.solvers.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "solvers={}", list(&sv));
        let _ = writeln!(s, "iterations={}", self.iterations);
        let _ = writeln!(s, "reference_solver={}", self.reference_solver);
        let _ = writeln!(s, "reference_iterations={}", self.reference_iterations);
        let _ = writeln!(s, "inner_iters={}", self.inner_iters);
        let _ = writeln!(s, "inner_tol={}", self.inner_tol);
        let _ = writeln!(s, "warm_start={}", self.warm_start);
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "timing={}", self.timing);
        s
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| TvError::invalid(format!("bad value {value:?} for {key}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

pub fn parse_execution(value: &str) -> Result<Execution> {
    match value.trim() {
        "serial" => Ok(Execution::Serial),
        "parallel" => Ok(Execution::Parallel),
        other => Err(TvError::invalid(format!(
            "execution must be serial or parallel, got {other:?}"
        ))),
    }
}
