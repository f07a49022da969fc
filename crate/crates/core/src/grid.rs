//! D-dimensional real signals on rectangular grids.

use crate::error::{Result, TvError};
use crate::vecops;

/// Largest supported number of grid dimensions.
pub const MAX_DIMS: usize = 3;

/// A real signal on a row-major grid of up to three dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalGrid {
    dims: Vec<usize>,
    data: Vec<f64>,
}

pub(crate) fn validate_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() {
        return Err(TvError::invalid("grid dims must be nonempty"));
    }
    if dims.len() > MAX_DIMS {
        return Err(TvError::invalid(format!(
            "at most {MAX_DIMS} dimensions supported, got {}",
            dims.len()
        )));
    }
    if let Some(pos) = dims.iter().position(|&d| d == 0) {
        return Err(TvError::invalid(format!("dimension {pos} has zero length")));
    }
    Ok(dims.iter().product())
}

impl SignalGrid {
    /// Grid of shape `dims` with every entry equal to `fill`.
    pub fn new(dims: &[usize], fill: f64) -> Result<Self> {
        let n = validate_dims(dims)?;
        if !fill.is_finite() {
            return Err(TvError::invalid("fill value must be finite"));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data: vec![fill; n],
        })
    }

    pub fn zeros(dims: &[usize]) -> Result<Self> {
        Self::new(dims, 0.0)
    }

    /// Wraps row-major `data`; rejects length mismatches and non-finite entries.
    pub fn from_vec(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let n = validate_dims(dims)?;
        if data.len() != n {
            return Err(TvError::invalid(format!(
                "data length {} does not match dims {:?} (N = {n})",
                data.len(),
                dims
            )));
        }
        if !vecops::all_finite(&data) {
            return Err(TvError::invalid("grid data contains non-finite values"));
        }
        Ok(Self {
            dims: dims.to_vec(),
            data,
        })
    }

    /// Same shape as `self`, new data. Length is checked, finiteness is not.
    pub(crate) fn with_data(&self, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), self.data.len());
        Self {
            dims: self.dims.clone(),
            data,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        vecops::norm(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        vecops::all_finite(&self.data)
    }

    pub fn same_shape(&self, other: &SignalGrid) -> bool {
        self.dims == other.dims
    }

    pub(crate) fn check_shape(&self, other: &SignalGrid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(TvError::invalid(format!(
                "grid dims mismatch: {:?} vs {:?}",
                self.dims, other.dims
            )))
        }
    }

    /// Row-major stride of dimension `d`.
    pub fn stride(&self, d: usize) -> usize {
        self.dims[d + 1..].iter().product()
    }

    /// Value range `(min, max)`.
    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}
