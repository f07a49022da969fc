//! Self-check suites behind the `frame-check` and `prox-check` commands.

use crate::error::Result;
use crate::frame::{tv_norm, ShiftedHaarFrame};
use crate::grid::SignalGrid;
use crate::prox::{self, ProxParams};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed error and the tolerance it was held to.
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, worst: f64, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: worst <= tol,
            detail: format!("worst {worst:.3e} (tol {tol:.0e})"),
        }
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("{verdict} {}: {}", self.name, self.detail)
    }
}

const FRAME_SHAPES: [&[usize]; 6] = [&[4], &[8], &[32], &[4, 4], &[32, 32], &[4, 6, 2]];

/// Perfect reconstruction, Parseval tightness and the TV/frame identity on
/// random grids.
pub fn frame_check(seed: u64, grids_per_shape: usize) -> Result<Vec<CheckResult>> {
    let mut rng = SeededRng::new(seed);
    let (mut recon, mut parseval, mut tv) = (0.0f64, 0.0f64, 0.0f64);
    for dims in FRAME_SHAPES {
        let frame = ShiftedHaarFrame::new(dims)?;
        for _ in 0..grids_per_shape {
            let x = SignalGrid::from_vec(dims, rng.normal_vec(frame.len()))?;
            let coeffs = frame.analyze(&x)?;
            let back = frame.pseudo_inverse(&coeffs)?;
            for (a, b) in back.data().iter().zip(x.data()) {
                recon = recon.max((a - b).abs());
            }
            let energy: f64 = coeffs.iter().map(|c| c.grid.norm().powi(2)).sum();
            let want = frame.k() as f64 * x.norm().powi(2);
            parseval = parseval.max((energy - want).abs() / want);
            let lambda = 0.5 + rng.uniform();
            let direct = tv_norm(&x, lambda)?;
            tv = tv.max((frame.tv_via_frame(&x, lambda)? - direct).abs() / direct);
        }
    }
    Ok(vec![
        CheckResult::new("pseudo-inverse reconstructs (W†W = I)", recon, 1e-12),
        CheckResult::new("Parseval tightness (Σ‖W_k x‖² = K‖x‖²)", parseval, 1e-10),
        CheckResult::new("TV equals weighted frame detail sum", tv, 1e-10),
    ])
}

/// Largest violation of the optimality conditions of `prox_{γR_k}` at the
/// computed point, relative to the split weight `λ√2K`.
pub fn shifted_haar_optimality_violation(
    frame: &ShiftedHaarFrame,
    k: usize,
    z: &SignalGrid,
    params: &ProxParams,
) -> Result<f64> {
    let x = prox::prox_shifted_haar(frame, k, z, params)?;
    let v = z.with_data(
        z.data()
            .iter()
            .zip(x.data())
            .map(|(a, b)| (a - b) / params.gamma())
            .collect(),
    );
    let wv = frame.forward(k, &v)?;
    let wx = frame.forward(k, &x)?;
    let mask = frame.detail_mask(k)?;
    let weight = params.split_weight();
    let scale = z.norm().max(1.0);
    let mut worst = 0.0f64;
    for ((&c, &xc), &is_detail) in wv.grid.data().iter().zip(wx.grid.data()).zip(mask) {
        let err = if !is_detail {
            c.abs()
        } else if xc.abs() > 1e-12 * scale {
            (c - weight * xc.signum()).abs()
        } else {
            (c.abs() - weight).max(0.0)
        };
        worst = worst.max(err);
    }
    Ok(worst)
}

pub fn prox_check(seed: u64, cases: usize) -> Result<Vec<CheckResult>> {
    let mut rng = SeededRng::new(seed);

    let scalar_cases = [(3.0, 1.0, 2.0), (-0.5, 1.0, 0.0), (-4.0, 1.5, -2.5), (0.0, 2.0, 0.0), (7.0, 0.0, 7.0)];
    let scalar = scalar_cases
        .iter()
        .map(|&(y, t, want)| Ok((prox::soft_threshold(y, t)? - want).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let mut optimality = 0.0f64;
    for i in 0..cases {
        let dims: &[usize] = if i % 2 == 0 { &[8] } else { &[4, 6] };
        let frame = ShiftedHaarFrame::new(dims)?;
        let z = SignalGrid::from_vec(dims, rng.normal_vec(frame.len()))?;
        let params = ProxParams::new(0.05 + rng.uniform(), 0.5 * rng.uniform(), frame.k())?;
        for k in 0..frame.k() {
            optimality = optimality.max(shifted_haar_optimality_violation(&frame, k, &z, &params)?);
        }
    }

    let mut nested = 0.0f64;
    for s in 0..cases.min(10) {
        let n = if s % 2 == 0 { 4 } else { 6 };
        let z = SignalGrid::from_vec(&[n], rng.normal_vec(n))?;
        let tau = 0.05 + 0.5 * rng.uniform();
        let exact = prox::prox_tv_bruteforce(&z, tau)?;
        let approx = prox::prox_tv_dual(&z, tau, 100_000, 1e-12)?;
        for (a, b) in exact.data().iter().zip(approx.x.data()) {
            nested = nested.max((a - b).abs());
        }
    }

    // γ = 1, λ = 1/4 on a single pair: τ = 1/√2.
    let frame = ShiftedHaarFrame::new(&[2])?;
    let params = ProxParams::new(1.0, 0.25, frame.k())?;
    let out = prox::prox_shifted_haar(&frame, 0, &SignalGrid::from_vec(&[2], vec![0.0, 2.0])?, &params)?;
    let pair = (out.data()[0] - 0.5).abs().max((out.data()[1] - 1.5).abs());

    Ok(vec![
        CheckResult::new("soft-threshold examples", scalar, 0.0),
        CheckResult::new("shifted-Haar prox optimality", optimality, 1e-10),
        CheckResult::new("shifted-Haar prox pair example", pair, 1e-15),
        CheckResult::new("nested TV prox matches brute force", nested, 1e-6),
    ])
}
