//! The redundant shifted-Haar frame and the anisotropic TV functional.
//!
//! For a grid with `D` dimensions the frame stacks `K = 2D` single-level
//! orthonormal Haar transforms `W_k`. Transform `k` pairs samples along
//! dimension `d = k / 2` starting at parity `s = k % 2`, with periodic wrap:
//! pair `(a, b) = (x[i], x[i+1 mod n])` becomes the scaling coefficient
//! `(a + b)/√2`, stored at `i`, and the detail coefficient `(b − a)/√2`,
//! stored at `i+1 mod n`. Coefficient grids therefore have the same shape as
//! signals, and the detail set `H_k` is every slot whose index along `d` has
//! parity `1 − s`.
//!
//! Each `W_k` is orthogonal, so `W† = (1/K)[W_1^T … W_K^T]` inverts the stacked
//! analysis exactly. Across the two shifts of one dimension the detail slots
//! hold every periodic first difference along that dimension exactly once,
//! scaled by `1/√2`, which is what ties the frame to total variation.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Result, TvError};
use crate::grid::{validate_dims, SignalGrid};

/// One transform of the frame: pairing dimension and parity offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Atom {
    pub dim: usize,
    pub shift: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedHaarFrame {
    dims: Vec<usize>,
    atoms: Vec<Atom>,
    detail_masks: Vec<Vec<bool>>,
}

/// Coefficients `W_k x`, laid out like the signal (scaling and detail
/// interleaved pairwise).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCoefficients {
    pub k: usize,
    pub grid: SignalGrid,
}

/// Calls `f(first, second)` for every pair of transform `(d, s)`.
///
/// Pairs are visited line by line in row-major order of the other dimensions.
#[inline]
pub(crate) fn for_each_pair(dims: &[usize], atom: Atom, mut f: impl FnMut(usize, usize)) {
    let n = dims[atom.dim];
    let stride: usize = dims[atom.dim + 1..].iter().product();
    let outer: usize = dims[..atom.dim].iter().product();
    for o in 0..outer {
        let line = o * n * stride;
        let mut j = atom.shift;
        while j < atom.shift + n {
            let a = line + (j % n) * stride;
            let b = line + ((j + 1) % n) * stride;
            for r in 0..stride {
                f(a + r, b + r);
            }
            j += 2;
        }
    }
}

impl ShiftedHaarFrame {
    /// Frame for signals of shape `dims`. Every dimension must be even.
    pub fn new(dims: &[usize]) -> Result<Self> {
        validate_dims(dims)?;
        if let Some((d, &n)) = dims.iter().enumerate().find(|(_, &n)| n % 2 != 0 || n < 2) {
            return Err(TvError::UnsupportedShape(format!(
                "dimension {d} has length {n}; shifted-Haar pairing needs even lengths >= 2"
            )));
        }
        let atoms: Vec<Atom> = (0..dims.len())
            .flat_map(|dim| (0..2).map(move |shift| Atom { dim, shift }))
            .collect();
        let n: usize = dims.iter().product();
        let detail_masks = atoms
            .iter()
            .map(|&atom| {
                let mut mask = vec![false; n];
                for_each_pair(dims, atom, |_, b| mask[b] = true);
                mask
            })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            atoms,
            detail_masks,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of signal dimensions `D`.
    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Redundancy `K = 2D`.
    pub fn k(&self) -> usize {
        self.atoms.len()
    }

    /// Signal length `N`.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, k: usize) -> Result<Atom> {
        self.atoms.get(k).copied().ok_or_else(|| {
            TvError::invalid(format!("transform index {k} out of range (K = {})", self.k()))
        })
    }

    /// `H_k`: `true` where `W_k` stores a detail coefficient.
    pub fn detail_mask(&self, k: usize) -> Result<&[bool]> {
        self.atom(k)?;
        Ok(&self.detail_masks[k])
    }

    fn check_grid(&self, x: &SignalGrid) -> Result<()> {
        if x.dims() == self.dims.as_slice() {
            Ok(())
        } else {
            Err(TvError::invalid(format!(
                "grid dims {:?} do not match frame dims {:?}",
                x.dims(),
                self.dims
            )))
        }
    }

    /// `W_k x`.
    pub fn forward(&self, k: usize, x: &SignalGrid) -> Result<FrameCoefficients> {
        let atom = self.atom(k)?;
        self.check_grid(x)?;
        let src = x.data();
        let mut out = vec![0.0; src.len()];
        for_each_pair(&self.dims, atom, |i, j| {
            let (a, b) = (src[i], src[j]);
            out[i] = (a + b) * FRAC_1_SQRT_2;
            out[j] = (b - a) * FRAC_1_SQRT_2;
        });
        Ok(FrameCoefficients {
            k,
            grid: x.with_data(out),
        })
    }

    /// `W_k^T c`, the exact inverse of [`forward`](Self::forward).
    pub fn inverse(&self, k: usize, c: &FrameCoefficients) -> Result<SignalGrid> {
        let atom = self.atom(k)?;
        self.check_grid(&c.grid)?;
        let src = c.grid.data();
        let mut out = vec![0.0; src.len()];
        for_each_pair(&self.dims, atom, |i, j| {
            let (scaling, detail) = (src[i], src[j]);
            out[i] = (scaling - detail) * FRAC_1_SQRT_2;
            out[j] = (scaling + detail) * FRAC_1_SQRT_2;
        });
        Ok(c.grid.with_data(out))
    }

    /// `W x`: all K transforms in atom order.
    pub fn analyze(&self, x: &SignalGrid) -> Result<Vec<FrameCoefficients>> {
        (0..self.k()).map(|k| self.forward(k, x)).collect()
    }

    /// `W† c = (1/K) Σ_k W_k^T c_k`, summed in atom order.
    pub fn pseudo_inverse(&self, coeffs: &[FrameCoefficients]) -> Result<SignalGrid> {
        if coeffs.len() != self.k() {
            return Err(TvError::invalid(format!(
                "pseudo-inverse needs {} coefficient sets, got {}",
                self.k(),
                coeffs.len()
            )));
        }
        let mut acc = vec![0.0; self.len()];
        for (k, c) in coeffs.iter().enumerate() {
            if c.k != k {
                return Err(TvError::invalid(format!(
                    "coefficient set {k} is tagged as transform {}",
                    c.k
                )));
            }
            let part = self.inverse(k, c)?;
            acc.iter_mut().zip(part.data()).for_each(|(a, p)| *a += p);
        }
        let inv_k = 1.0 / self.k() as f64;
        acc.iter_mut().for_each(|a| *a *= inv_k);
        SignalGrid::from_vec(&self.dims, acc)
    }

    /// `λ√2 Σ_k Σ_{n∈H_k} |[W_k x]_n|`; equals [`tv_norm`] by construction.
    pub fn tv_via_frame(&self, x: &SignalGrid, lambda: f64) -> Result<f64> {
        check_lambda(lambda)?;
        let mut total = 0.0;
        for k in 0..self.k() {
            let c = self.forward(k, x)?;
            total += c
                .grid
                .data()
                .iter()
                .zip(&self.detail_masks[k])
                .filter(|(_, &m)| m)
                .map(|(v, _)| v.abs())
                .sum::<f64>();
        }
        Ok(lambda * std::f64::consts::SQRT_2 * total)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(TvError::invalid(format!(
            "regularization weight must be finite and >= 0, got {lambda}"
        )))
    }
}

fn check_dim(x: &SignalGrid, d: usize) -> Result<()> {
    if d < x.ndim() {
        Ok(())
    } else {
        Err(TvError::invalid(format!(
            "dimension index {d} out of range for a {}-D grid",
            x.ndim()
        )))
    }
}

/// Periodic forward difference `[D_d x]_i = x[next_d(i)] − x[i]`.
pub fn discrete_gradient(x: &SignalGrid, d: usize) -> Result<SignalGrid> {
    check_dim(x, d)?;
    let mut out = vec![0.0; x.len()];
    gradient_into(x.dims(), d, x.data(), &mut out);
    Ok(x.with_data(out))
}

/// Adjoint of [`discrete_gradient`]: `[D_d^T p]_i = p[prev_d(i)] − p[i]`.
pub fn discrete_gradient_adjoint(p: &SignalGrid, d: usize) -> Result<SignalGrid> {
    check_dim(p, d)?;
    let mut out = vec![0.0; p.len()];
    gradient_adjoint_add(p.dims(), d, p.data(), &mut out);
    Ok(p.with_data(out))
}

pub(crate) fn gradient_into(dims: &[usize], d: usize, x: &[f64], out: &mut [f64]) {
    let n = dims[d];
    let stride: usize = dims[d + 1..].iter().product();
    let outer: usize = dims[..d].iter().product();
    for o in 0..outer {
        let line = o * n * stride;
        for j in 0..n {
            let cur = line + j * stride;
            let next = line + ((j + 1) % n) * stride;
            for r in 0..stride {
                out[cur + r] = x[next + r] - x[cur + r];
            }
        }
    }
}

/// Adds `D_d^T p` into `out`.
pub(crate) fn gradient_adjoint_add(dims: &[usize], d: usize, p: &[f64], out: &mut [f64]) {
    let n = dims[d];
    let stride: usize = dims[d + 1..].iter().product();
    let outer: usize = dims[..d].iter().product();
    for o in 0..outer {
        let line = o * n * stride;
        for j in 0..n {
            let cur = line + j * stride;
            let prev = line + ((j + n - 1) % n) * stride;
            for r in 0..stride {
                out[cur + r] += p[prev + r] - p[cur + r];
            }
        }
    }
}

/// Anisotropic TV `λ Σ_d Σ_n |[D_d x]_n|` with periodic boundaries.
pub fn tv_norm(x: &SignalGrid, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let dims = x.dims();
    let data = x.data();
    let mut total = 0.0;
    for d in 0..dims.len() {
        let n = dims[d];
        let stride: usize = dims[d + 1..].iter().product();
        let outer: usize = dims[..d].iter().product();
        for o in 0..outer {
            let line = o * n * stride;
            for j in 0..n {
                let cur = line + j * stride;
                let next = line + ((j + 1) % n) * stride;
                for r in 0..stride {
                    total += (data[next + r] - data[cur + r]).abs();
                }
            }
        }
    }
    Ok(lambda * total)
}
