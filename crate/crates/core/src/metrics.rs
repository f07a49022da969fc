//! Measurement noise and reconstruction quality metrics.

use crate::error::{Result, TvError};
use crate::grid::SignalGrid;
use crate::rng::SeededRng;
use crate::vecops;

/// Adds white Gaussian noise to `y`, rescaled so the realized SNR equals
/// `snr_db` exactly. Returns `(y + e, e)`.
pub fn add_awgn(y: &[f64], snr_db: f64, rng: &mut SeededRng) -> Result<(Vec<f64>, Vec<f64>)> {
    if !snr_db.is_finite() {
        return Err(TvError::invalid("snr_db must be finite"));
    }
    let signal_power = vecops::norm_sq(y);
    if signal_power == 0.0 || !signal_power.is_finite() {
        return Err(TvError::invalid(
            "SNR is undefined for an all-zero (or non-finite) signal",
        ));
    }
    let mut noise = rng.normal_vec(y.len());
    let raw_power = vecops::norm_sq(&noise);
    // A zero draw is impossible in practice for len >= 1, but keep the division safe.
    if raw_power == 0.0 {
        return Err(TvError::invalid("degenerate noise draw"));
    }
    let target_power = signal_power / 10f64.powf(snr_db / 10.0);
    let scale = (target_power / raw_power).sqrt();
    noise.iter_mut().for_each(|v| *v *= scale);
    let noisy = y.iter().zip(&noise).map(|(a, b)| a + b).collect();
    Ok((noisy, noise))
}

/// SNR in dB of `noisy` relative to the clean `signal`.
pub fn measured_snr_db(signal: &[f64], noise: &[f64]) -> f64 {
    10.0 * (vecops::norm_sq(signal) / vecops::norm_sq(noise)).log10()
}

/// `10·log10(‖reference‖² / ‖reference − estimate‖²)`.
///
/// Returns `f64::INFINITY` when the estimate reproduces the reference exactly.
pub fn snr_db(reference: &SignalGrid, estimate: &SignalGrid) -> Result<f64> {
    reference.check_shape(estimate)?;
    let signal = vecops::norm_sq(reference.data());
    if signal == 0.0 {
        return Err(TvError::invalid("reference must not be all-zero"));
    }
    let err = vecops::dist_sq(reference.data(), estimate.data());
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / err).log10())
}

/// `‖a − b‖ / ‖b‖`.
pub fn relative_l2(a: &SignalGrid, b: &SignalGrid) -> Result<f64> {
    a.check_shape(b)?;
    let denom = b.norm();
    if denom == 0.0 {
        return Err(TvError::invalid("relative distance to an all-zero grid"));
    }
    Ok(vecops::dist_sq(a.data(), b.data()).sqrt() / denom)
}
