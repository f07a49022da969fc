//! Runtime checks of the fixed-step convergence guarantees.
//!
//! For the plain parallel proximal iteration, if `G` bounds `‖∇D‖` along the
//! iterates and every subgradient of every `R_k` that the analysis touches,
//! then for every `t ≥ 1` and any anchor `x`
//!
//! ```text
//! C(x^t) − C(x) ≤ (‖x^{t−1} − x‖² − ‖x^t − x‖²)/(2γ) + 8γG²
//! ```
//!
//! and the limit inferior of `C(x^t) − C*` is at most `8γG²`.
//!
//! The subgradients are recovered from the iterates themselves: proximal
//! optimality gives `(z^t − x_k^t)/γ ∈ ∂R_k(x_k^t)`, their average `g^t`
//! satisfies `x^t = x^{t−1} − γ(∇D(x^{t−1}) + g^t)`, and the smallest
//! subgradient of `R_k` at `x^t` has norm `λ√2K·√(#nonzero details of W_k x^t)`.

use crate::error::{Result, TvError};
use crate::grid::SignalGrid;
use crate::vecops;

use super::{cost, ProblemInstance, StepTrace};

/// Snapshots of every iteration of one run with a fixed step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub step: f64,
    pub steps: Vec<StepTrace>,
}

impl Trajectory {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `x^0, x^1, …, x^T`.
    pub fn iterates(&self) -> impl Iterator<Item = &SignalGrid> {
        self.steps
            .first()
            .map(|s| &s.x_prev)
            .into_iter()
            .chain(self.steps.iter().map(|s| &s.x))
    }
}

/// Summary of the convergence checks for one trajectory and anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceDiagnostics {
    /// Estimated bound `G`.
    pub g_bound: f64,
    /// RHS − LHS of the per-iteration inequality, one per iteration.
    pub prop1_residuals: Vec<f64>,
    /// `4G² − ‖∇D(x^{t−1}) + g^t‖²`, one per iteration.
    pub step_bound_residuals: Vec<f64>,
    /// `8γG²`.
    pub prop2_bound: f64,
}

impl ConvergenceDiagnostics {
    pub fn evaluate(
        instance: &ProblemInstance,
        trajectory: &Trajectory,
        anchor: &SignalGrid,
    ) -> Result<Self> {
        let g = estimate_g(instance, trajectory)?;
        Ok(Self {
            g_bound: g,
            prop1_residuals: check_prop1(instance, trajectory, anchor, trajectory.step, g)?,
            step_bound_residuals: step_bound_residuals(instance, trajectory, g)?,
            prop2_bound: prop2_bound(trajectory.step, g)?,
        })
    }

    pub fn min_prop1_residual(&self) -> f64 {
        self.prop1_residuals.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_step_bound_residual(&self) -> f64 {
        self.step_bound_residuals
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Norm of the smallest subgradient of `R_k` at `x`.
fn min_subgradient_norm(instance: &ProblemInstance, k: usize, x: &SignalGrid) -> Result<f64> {
    let frame = instance.frame();
    let coeffs = frame.forward(k, x)?;
    let mask = frame.detail_mask(k)?;
    let nonzero = coeffs
        .grid
        .data()
        .iter()
        .zip(mask)
        .filter(|(v, &m)| m && **v != 0.0)
        .count();
    let weight = instance.lambda() * std::f64::consts::SQRT_2 * frame.k() as f64;
    Ok(weight * (nonzero as f64).sqrt())
}

/// Subgradient `(z^t − x_k^t)/γ` of `R_k` at the proximal point `x_k^t`.
pub fn extracted_subgradient(z: &SignalGrid, prox_point: &SignalGrid, step: f64) -> Vec<f64> {
    z.data()
        .iter()
        .zip(prox_point.data())
        .map(|(a, b)| (a - b) / step)
        .collect()
}

/// `G = max` over the trajectory of `‖∇D(x^t)‖`, the extracted subgradients
/// `‖(z^t − x_k^t)/γ‖`, and the smallest subgradient norms of each `R_k` at
/// `x^t`.
pub fn estimate_g(instance: &ProblemInstance, trajectory: &Trajectory) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(TvError::invalid("cannot estimate G from an empty trajectory"));
    }
    let k = instance.frame().k();
    let mut g: f64 = 0.0;
    for s in &trajectory.steps {
        for x in [&s.x_prev, &s.x] {
            g = g.max(vecops::norm(&instance.gradient(x.data())));
            for kk in 0..k {
                g = g.max(min_subgradient_norm(instance, kk, x)?);
            }
        }
        for p in &s.prox_points {
            g = g.max(vecops::norm(&extracted_subgradient(&s.z, p, trajectory.step)));
        }
    }
    Ok(g)
}

/// Per-iteration residual `RHS − LHS` of
/// `C(x^t) − C(x) ≤ (‖x^{t−1} − x‖² − ‖x^t − x‖²)/(2γ) + 8γG²`.
pub fn check_prop1(
    instance: &ProblemInstance,
    trajectory: &Trajectory,
    reference_x: &SignalGrid,
    step: f64,
    g: f64,
) -> Result<Vec<f64>> {
    let c_ref = cost(instance, reference_x)?;
    let slack = 8.0 * step * g * g;
    trajectory
        .steps
        .iter()
        .map(|s| {
            let lhs = cost(instance, &s.x)? - c_ref;
            let before = vecops::dist_sq(s.x_prev.data(), reference_x.data());
            let after = vecops::dist_sq(s.x.data(), reference_x.data());
            Ok((before - after) / (2.0 * step) + slack - lhs)
        })
        .collect()
}

/// `4G² − ‖∇D(x^{t−1}) + g^t‖²` per iteration, with `g^t` the average of the
/// extracted subgradients.
pub fn step_bound_residuals(
    instance: &ProblemInstance,
    trajectory: &Trajectory,
    g: f64,
) -> Result<Vec<f64>> {
    let bound = 4.0 * g * g;
    trajectory
        .steps
        .iter()
        .map(|s| {
            if s.prox_points.is_empty() {
                return Err(TvError::invalid("trajectory step has no proximal points"));
            }
            let mut total = instance.gradient(s.x_prev.data());
            let inv_k = 1.0 / s.prox_points.len() as f64;
            for p in &s.prox_points {
                let sub = extracted_subgradient(&s.z, p, trajectory.step);
                total.iter_mut().zip(&sub).for_each(|(a, b)| *a += inv_k * b);
            }
            Ok(bound - vecops::norm_sq(&total))
        })
        .collect()
}

/// `8γG²`.
pub fn prop2_bound(step: f64, g: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(TvError::invalid("step must be > 0"));
    }
    if !(g >= 0.0) {
        return Err(TvError::invalid("G must be >= 0"));
    }
    Ok(8.0 * step * g * g)
}
