//! Iterative solvers for `min_x ½‖y − Hx‖² + λ‖Dx‖₁`.
//!
//! | variant              | proximal step                                     | momentum |
//! |----------------------|---------------------------------------------------|----------|
//! | `parallel-prox`      | average of the K shifted-Haar proximals           | no       |
//! | `fast-parallel-prox` | same                                              | FISTA    |
//! | `ista-ref`           | full TV proximal via the nested dual solver       | no       |
//! | `fast-ista-ref`      | same                                              | FISTA    |
//!
//! All variants use a fixed step `γ`. The momentum variants follow
//! `q_t = (1 + √(1 + 4q_{t−1}²))/2`, `u^t = x^t + ((q_{t−1} − 1)/q_t)(x^t − x^{t−1})`
//! with `u^0 = x^0`, `q_0 = 1`.

pub mod diagnostics;
pub mod records;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::error::{Result, TvError};
use crate::exec::{self, Execution};
use crate::frame::{tv_norm, ShiftedHaarFrame};
use crate::grid::SignalGrid;
use crate::operators::LinearOperator;
use crate::prox::{self, DualState, ProxParams, DEFAULT_INNER_ITERS, DEFAULT_INNER_TOL};
use crate::vecops;

pub use diagnostics::{
    check_prop1, estimate_g, prop2_bound, step_bound_residuals, ConvergenceDiagnostics, Trajectory,
};
pub use records::{read_records_csv, write_records_csv, IterationRecord};

/// A TV-regularized least-squares problem.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    op: Arc<dyn LinearOperator>,
    y: Vec<f64>,
    lambda: f64,
    frame: ShiftedHaarFrame,
}

impl ProblemInstance {
    pub fn new(
        op: Arc<dyn LinearOperator>,
        y: Vec<f64>,
        lambda: f64,
        frame: ShiftedHaarFrame,
    ) -> Result<Self> {
        let (m, n) = op.shape();
        if y.len() != m {
            return Err(TvError::invalid(format!(
                "measurements have length {}, operator outputs {m}",
                y.len()
            )));
        }
        if frame.len() != n {
            return Err(TvError::invalid(format!(
                "frame covers {} samples, operator expects {n}",
                frame.len()
            )));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(TvError::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if !vecops::all_finite(&y) {
            return Err(TvError::invalid("measurements contain non-finite values"));
        }
        Ok(Self { op, y, lambda, frame })
    }

    pub fn op(&self) -> &dyn LinearOperator {
        self.op.as_ref()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn frame(&self) -> &ShiftedHaarFrame {
        &self.frame
    }

    pub fn dims(&self) -> &[usize] {
        self.frame.dims()
    }

    /// Same operator and data, different regularization weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.op.clone(), self.y.clone(), lambda, self.frame.clone())
    }

    fn check_grid(&self, x: &SignalGrid) -> Result<()> {
        if x.dims() == self.dims() {
            Ok(())
        } else {
            Err(TvError::invalid(format!(
                "iterate dims {:?} do not match problem dims {:?}",
                x.dims(),
                self.dims()
            )))
        }
    }

    /// `∇D(x) = Hᵀ(Hx − y)`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (m, n) = self.op.shape();
        let mut r = vec![0.0; m];
        self.op.apply_into(x, &mut r);
        r.iter_mut().zip(&self.y).for_each(|(ri, yi)| *ri -= yi);
        let mut g = vec![0.0; n];
        self.op.apply_adjoint_into(&r, &mut g);
        g
    }

    fn data_term(&self, x: &[f64]) -> f64 {
        let mut hx = vec![0.0; self.y.len()];
        self.op.apply_into(x, &mut hx);
        0.5 * vecops::dist_sq(&hx, &self.y)
    }
}

/// `C(x) = ½‖y − Hx‖² + λ‖Dx‖₁`.
pub fn cost(instance: &ProblemInstance, x: &SignalGrid) -> Result<f64> {
    instance.check_grid(x)?;
    Ok(instance.data_term(x.data()) + tv_norm(x, instance.lambda)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    IstaReference,
    FastIstaReference,
    ParallelProx,
    FastParallelProx,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::IstaReference,
        Variant::FastIstaReference,
        Variant::ParallelProx,
        Variant::FastParallelProx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::IstaReference => "ista-ref",
            Variant::FastIstaReference => "fast-ista-ref",
            Variant::ParallelProx => "parallel-prox",
            Variant::FastParallelProx => "fast-parallel-prox",
        }
    }

    pub fn is_accelerated(self) -> bool {
        matches!(self, Variant::FastIstaReference | Variant::FastParallelProx)
    }

    pub fn uses_nested_prox(self) -> bool {
        matches!(self, Variant::IstaReference | Variant::FastIstaReference)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = TvError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| {
                TvError::invalid(format!(
                    "unknown solver {s:?} (expected one of ista-ref, fast-ista-ref, parallel-prox, fast-parallel-prox)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub variant: Variant,
    /// Fixed step size `γ`.
    pub step: f64,
    pub iterations: usize,
    /// Nested TV proximal budget (reference variants only).
    pub inner_iters: usize,
    pub inner_tol: f64,
    /// Reuse the previous dual iterate in the nested proximal.
    pub warm_start: bool,
    /// Keep per-iteration snapshots for [`diagnostics`].
    pub record_diagnostics: bool,
    /// Scheduling of the K proximals.
    pub execution: Execution,
    /// Fill [`IterationRecord::wall_ms`]. Off keeps outputs reproducible.
    pub timing: bool,
}

impl SolverConfig {
    pub fn new(variant: Variant, step: f64, iterations: usize) -> Self {
        Self {
            variant,
            step,
            iterations,
            inner_iters: DEFAULT_INNER_ITERS,
            inner_tol: DEFAULT_INNER_TOL,
            warm_start: false,
            record_diagnostics: false,
            execution: Execution::default(),
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(TvError::invalid(format!(
                "step size must be finite and > 0, got {}",
                self.step
            )));
        }
        if self.iterations == 0 {
            return Err(TvError::invalid("iterations must be >= 1"));
        }
        if self.variant.uses_nested_prox() && self.inner_iters == 0 {
            return Err(TvError::invalid("inner_iters must be >= 1"));
        }
        Ok(())
    }
}

/// Iterates of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// `x^t`.
    pub x: SignalGrid,
    /// `x^{t−1}`.
    pub x_prev: SignalGrid,
    /// Extrapolated point `u^t` (accelerated variants).
    pub u: SignalGrid,
    /// Inertia `q_t`, starting at 1.
    pub q: f64,
    pub t: usize,
    /// Dual iterate kept for warm starts of the nested proximal.
    pub dual: Option<DualState>,
}

impl SolverState {
    pub fn new(x0: SignalGrid) -> Self {
        Self {
            x_prev: x0.clone(),
            u: x0.clone(),
            x: x0,
            q: 1.0,
            t: 0,
            dual: None,
        }
    }
}

/// Intermediate quantities of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    /// `x^{t−1}`.
    pub x_prev: SignalGrid,
    /// Gradient point `z^t`.
    pub z: SignalGrid,
    /// `x_k^t = prox_{γR_k}(z^t)` in atom order; the single full proximal for
    /// reference variants.
    pub prox_points: Vec<SignalGrid>,
    /// `x^t`.
    pub x: SignalGrid,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepInfo {
    pub trace: Option<StepTrace>,
    pub inner_iterations: Option<usize>,
    pub inner_converged: Option<bool>,
}

fn gradient_point(instance: &ProblemInstance, from: &SignalGrid, step: f64) -> SignalGrid {
    let g = instance.gradient(from.data());
    let z = from
        .data()
        .iter()
        .zip(&g)
        .map(|(v, gi)| v - step * gi)
        .collect();
    from.with_data(z)
}

fn ensure_finite(grid: &SignalGrid, iteration: usize, what: &str) -> Result<()> {
    if grid.is_finite() {
        Ok(())
    } else {
        Err(TvError::NumericalFailure {
            iteration,
            what: format!("{what} has non-finite entries"),
        })
    }
}

/// `(1/K) Σ_k prox_{γR_k}(z)`, reduced in atom order. Also returns the
/// individual proximal points when `keep` is set.
fn averaged_proximals(
    frame: &ShiftedHaarFrame,
    z: &SignalGrid,
    params: &ProxParams,
    execution: Execution,
    keep: bool,
) -> (SignalGrid, Vec<SignalGrid>) {
    let dims = frame.dims();
    let tau = params.threshold();
    let parts = exec::map_indices(frame.k(), execution, |k| {
        let mut out = vec![0.0; z.len()];
        prox::prox_shifted_haar_into(dims, frame.atoms()[k], z.data(), tau, &mut out);
        out
    });
    let mut acc = vec![0.0; z.len()];
    for part in &parts {
        acc.iter_mut().zip(part).for_each(|(a, p)| *a += p);
    }
    let inv_k = 1.0 / frame.k() as f64;
    acc.iter_mut().for_each(|a| *a *= inv_k);
    let points = if keep {
        parts.into_iter().map(|p| z.with_data(p)).collect()
    } else {
        Vec::new()
    };
    (z.with_data(acc), points)
}

fn momentum_update(state: &mut SolverState, next: SignalGrid) {
    let q_next = 0.5 * (1.0 + (1.0 + 4.0 * state.q * state.q).sqrt());
    let weight = (state.q - 1.0) / q_next;
    let u = next
        .data()
        .iter()
        .zip(state.x.data())
        .map(|(xn, xo)| xn + weight * (xn - xo))
        .collect();
    state.u = next.with_data(u);
    state.q = q_next;
    state.x_prev = std::mem::replace(&mut state.x, next);
    state.t += 1;
}

fn plain_update(state: &mut SolverState, next: SignalGrid) {
    state.u = next.clone();
    state.x_prev = std::mem::replace(&mut state.x, next);
    state.t += 1;
}

fn parallel_prox_core(
    instance: &ProblemInstance,
    config: &SolverConfig,
    state: &SolverState,
    from: &SignalGrid,
) -> Result<(SignalGrid, StepInfo)> {
    let iteration = state.t + 1;
    let params = ProxParams::new(config.step, instance.lambda, instance.frame.k())?;
    let z = gradient_point(instance, from, config.step);
    ensure_finite(&z, iteration, "gradient point")?;
    let (next, points) = averaged_proximals(
        &instance.frame,
        &z,
        &params,
        config.execution,
        config.record_diagnostics,
    );
    ensure_finite(&next, iteration, "iterate")?;
    let trace = config.record_diagnostics.then(|| StepTrace {
        x_prev: state.x.clone(),
        z,
        prox_points: points,
        x: next.clone(),
    });
    Ok((
        next,
        StepInfo {
            trace,
            ..StepInfo::default()
        },
    ))
}

/// One plain parallel proximal iteration:
/// `z = x − γ∇D(x)`, `x' = (1/K) Σ_k prox_{γR_k}(z)`.
pub fn step_parallel_prox(
    instance: &ProblemInstance,
    config: &SolverConfig,
    state: &mut SolverState,
) -> Result<StepInfo> {
    instance.check_grid(&state.x)?;
    let (next, info) = parallel_prox_core(instance, config, state, &state.x)?;
    plain_update(state, next);
    Ok(info)
}

/// One accelerated parallel proximal iteration (gradient step taken at `u`).
pub fn step_fast_parallel_prox(
    instance: &ProblemInstance,
    config: &SolverConfig,
    state: &mut SolverState,
) -> Result<StepInfo> {
    instance.check_grid(&state.u)?;
    if !(state.q >= 1.0) {
        return Err(TvError::invalid("inertia q must be >= 1"));
    }
    let (next, info) = parallel_prox_core(instance, config, state, &state.u)?;
    momentum_update(state, next);
    Ok(info)
}

fn nested_prox_core(
    instance: &ProblemInstance,
    config: &SolverConfig,
    state: &mut SolverState,
    from: &SignalGrid,
) -> Result<(SignalGrid, StepInfo)> {
    let iteration = state.t + 1;
    let z = gradient_point(instance, from, config.step);
    ensure_finite(&z, iteration, "gradient point")?;
    let tau = config.step * instance.lambda;
    let warm = if config.warm_start {
        state.dual.take()
    } else {
        None
    };
    let out = match warm {
        Some(dual) => prox::prox_tv_dual_warm(&z, tau, config.inner_iters, config.inner_tol, dual)?,
        None => prox::prox_tv_dual(&z, tau, config.inner_iters, config.inner_tol)?,
    };
    ensure_finite(&out.x, iteration, "iterate")?;
    if config.warm_start {
        state.dual = Some(out.state);
    }
    let trace = config.record_diagnostics.then(|| StepTrace {
        x_prev: state.x.clone(),
        z,
        prox_points: vec![out.x.clone()],
        x: out.x.clone(),
    });
    Ok((
        out.x,
        StepInfo {
            trace,
            inner_iterations: Some(out.iterations),
            inner_converged: Some(out.converged),
        },
    ))
}

/// One reference ISTA iteration with the nested TV proximal.
/// Inner non-convergence is reported in the returned info, not as an error.
pub fn step_ista_reference(
    instance: &ProblemInstance,
    config: &SolverConfig,
    state: &mut SolverState,
) -> Result<StepInfo> {
    instance.check_grid(&state.x)?;
    let from = state.x.clone();
    let (next, info) = nested_prox_core(instance, config, state, &from)?;
    plain_update(state, next);
    Ok(info)
}

/// FISTA with the nested TV proximal.
pub fn step_fast_ista_reference(
    instance: &ProblemInstance,
    config: &SolverConfig,
    state: &mut SolverState,
) -> Result<StepInfo> {
    instance.check_grid(&state.u)?;
    let from = state.u.clone();
    let (next, info) = nested_prox_core(instance, config, state, &from)?;
    momentum_update(state, next);
    Ok(info)
}

pub fn step(
    instance: &ProblemInstance,
    config: &SolverConfig,
    state: &mut SolverState,
) -> Result<StepInfo> {
    match config.variant {
        Variant::IstaReference => step_ista_reference(instance, config, state),
        Variant::FastIstaReference => step_fast_ista_reference(instance, config, state),
        Variant::ParallelProx => step_parallel_prox(instance, config, state),
        Variant::FastParallelProx => step_fast_parallel_prox(instance, config, state),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub state: SolverState,
    pub records: Vec<IterationRecord>,
    /// Present when `record_diagnostics` was set.
    pub trajectory: Option<Trajectory>,
}

impl RunOutput {
    pub fn final_cost(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.cost)
    }

    pub fn min_cost(&self) -> f64 {
        self.records.iter().map(|r| r.cost).fold(f64::INFINITY, f64::min)
    }
}

/// A run that stopped early; `records` holds every completed iteration.
#[derive(Debug, Error)]
#[error("{error} (after {} completed iterations)", records.len())]
pub struct RunFailure {
    #[source]
    pub error: TvError,
    pub records: Vec<IterationRecord>,
}

impl From<RunFailure> for TvError {
    fn from(f: RunFailure) -> Self {
        f.error
    }
}

/// Runs `config.iterations` iterations from `x0`, recording `C(x^t)` (and the
/// relative gap when `cstar` is given) after every iteration.
pub fn run(
    instance: &ProblemInstance,
    config: &SolverConfig,
    x0: SignalGrid,
    cstar: Option<f64>,
) -> Result<RunOutput, RunFailure> {
    let fail = |error, records| RunFailure { error, records };
    if let Err(e) = config.validate().and_then(|_| instance.check_grid(&x0)) {
        return Err(fail(e, Vec::new()));
    }
    let mut state = SolverState::new(x0);
    let mut records = Vec::with_capacity(config.iterations);
    let mut trajectory = config
        .record_diagnostics
        .then(|| Trajectory::new(config.step));
    let start = Instant::now();
    for _ in 0..config.iterations {
        let info = match step(instance, config, &mut state) {
            Ok(info) => info,
            Err(e) => return Err(fail(e, records)),
        };
        let c = match cost(instance, &state.x) {
            Ok(c) if c.is_finite() => c,
            Ok(_) => {
                let e = TvError::NumericalFailure {
                    iteration: state.t,
                    what: "cost is not finite".into(),
                };
                return Err(fail(e, records));
            }
            Err(e) => return Err(fail(e, records)),
        };
        records.push(IterationRecord {
            t: state.t,
            cost: c,
            relative_gap: cstar.map(|cs| relative_gap(c, cs)),
            wall_ms: config
                .timing
                .then(|| start.elapsed().as_secs_f64() * 1e3),
            inner_converged: info.inner_converged,
        });
        if let (Some(traj), Some(trace)) = (trajectory.as_mut(), info.trace) {
            traj.steps.push(trace);
        }
    }
    Ok(RunOutput {
        state,
        records,
        trajectory,
    })
}

/// `(C − C*)/C*`.
pub fn relative_gap(cost: f64, cstar: f64) -> f64 {
    (cost - cstar) / cstar
}

/// Recomputes every record's gap against `cstar`.
pub fn fill_gaps(records: &mut [IterationRecord], cstar: f64) {
    for r in records {
        r.relative_gap = Some(relative_gap(r.cost, cstar));
    }
}
