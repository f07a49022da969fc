//! Linear forward models, their adjoints, and step-size selection.

use std::fmt;

use crate::error::{Result, TvError};
use crate::exec::{self, Execution};
use crate::rng::SeededRng;
use crate::vecops;

/// Products larger than this many multiply-adds are split across rows.
const PARALLEL_MATVEC_WORK: usize = 1 << 16;

/// A real linear map `H: R^N -> R^M` with its transpose.
///
/// Implementations must be deterministic: each output entry is accumulated in
/// ascending input order regardless of how rows are scheduled.
pub trait LinearOperator: Send + Sync + fmt::Debug {
    /// `(M, N)`: output length, input length.
    fn shape(&self) -> (usize, usize);

    /// Writes `Hx` into `out` (length M). Lengths are the caller's responsibility.
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    /// Writes `H^T u` into `out` (length N).
    fn apply_adjoint_into(&self, u: &[f64], out: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (m, n) = self.shape();
        check_len("x", x.len(), n)?;
        let mut out = vec![0.0; m];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    fn apply_adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (m, n) = self.shape();
        check_len("u", u.len(), m)?;
        let mut out = vec![0.0; n];
        self.apply_adjoint_into(u, &mut out);
        Ok(out)
    }
}

fn check_len(name: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(TvError::invalid(format!(
            "{name} has length {got}, operator expects {want}"
        )))
    }
}

/// `H = I` on `R^N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityOperator {
    n: usize,
}

impl IdentityOperator {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(TvError::invalid("identity operator needs n >= 1"));
        }
        Ok(Self { n })
    }
}

impl LinearOperator for IdentityOperator {
    fn shape(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }

    fn apply_adjoint_into(&self, u: &[f64], out: &mut [f64]) {
        out.copy_from_slice(u);
    }
}

/// Dense row-major `M × N` matrix. A transposed copy is kept so the adjoint
/// also streams contiguous rows.
#[derive(Clone, PartialEq)]
pub struct DenseOperator {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    transposed: Vec<f64>,
}

impl fmt::Debug for DenseOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseOperator")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

impl DenseOperator {
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(TvError::invalid("dense operator dims must be >= 1"));
        }
        if entries.len() != rows * cols {
            return Err(TvError::invalid(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if !vecops::all_finite(&entries) {
            return Err(TvError::invalid("matrix entries must be finite"));
        }
        let mut transposed = vec![0.0; entries.len()];
        for i in 0..rows {
            for j in 0..cols {
                transposed[j * rows + i] = entries[i * cols + j];
            }
        }
        Ok(Self {
            rows,
            cols,
            entries,
            transposed,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(TvError::invalid("ragged rows"));
        }
        Self::from_row_major(m, n, rows.concat())
    }

    /// `scale · I_n` as a dense matrix.
    pub fn scaled_identity(n: usize, scale: f64) -> Result<Self> {
        let mut e = vec![0.0; n * n];
        for i in 0..n {
            e[i * n + i] = scale;
        }
        Self::from_row_major(n, n, e)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    fn execution(&self) -> Execution {
        if self.rows * self.cols >= PARALLEL_MATVEC_WORK {
            Execution::Parallel
        } else {
            Execution::Serial
        }
    }
}

impl LinearOperator for DenseOperator {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.cols;
        exec::fill_indexed(out, self.execution(), |i| {
            vecops::dot(&self.entries[i * n..(i + 1) * n], x)
        });
    }

    fn apply_adjoint_into(&self, u: &[f64], out: &mut [f64]) {
        let m = self.rows;
        exec::fill_indexed(out, self.execution(), |j| {
            vecops::dot(&self.transposed[j * m..(j + 1) * m], u)
        });
    }
}

/// Draws `H` with i.i.d. `N(0, 1/M)` entries, filled row by row.
pub fn sample_gaussian_operator(m: usize, n: usize, rng: &mut SeededRng) -> Result<DenseOperator> {
    if m == 0 || n == 0 {
        return Err(TvError::invalid("measurement operator dims must be >= 1"));
    }
    let sd = 1.0 / (m as f64).sqrt();
    let entries = (0..m * n).map(|_| rng.standard_normal() * sd).collect();
    DenseOperator::from_row_major(m, n, entries)
}

/// Power-iteration estimate of `λ_max(H^T H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub const DEFAULT_LIPSCHITZ_TOL: f64 = 1e-8;
pub const DEFAULT_LIPSCHITZ_MAX_ITER: usize = 10_000;

/// Runs power iteration on `H^T H` from a Gaussian start until the Rayleigh
/// quotient changes by at most `tol` (relative) between iterations.
///
/// A zero operator yields `value = 0` with `converged = true`; callers must not
/// turn that into a step size.
pub fn lipschitz_constant(
    op: &dyn LinearOperator,
    tol: f64,
    max_iter: usize,
    rng: &mut SeededRng,
) -> Result<LipschitzEstimate> {
    if !(tol > 0.0) {
        return Err(TvError::invalid("tol must be positive"));
    }
    if max_iter == 0 {
        return Err(TvError::invalid("max_iter must be >= 1"));
    }
    let (m, n) = op.shape();
    let mut v = rng.normal_vec(n);
    let nv = vecops::norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut hv = vec![0.0; m];
    let mut w = vec![0.0; n];
    let mut previous = f64::NAN;
    for it in 1..=max_iter {
        op.apply_into(&v, &mut hv);
        let rayleigh = vecops::norm_sq(&hv);
        op.apply_adjoint_into(&hv, &mut w);
        let nw = vecops::norm(&w);
        if nw == 0.0 || rayleigh == 0.0 {
            return Ok(LipschitzEstimate {
                value: 0.0,
                iterations: it,
                converged: true,
            });
        }
        if (rayleigh - previous).abs() <= tol * rayleigh {
            return Ok(LipschitzEstimate {
                value: rayleigh,
                iterations: it,
                converged: true,
            });
        }
        previous = rayleigh;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    Ok(LipschitzEstimate {
        value: previous,
        iterations: max_iter,
        converged: false,
    })
}

/// `∇D(x) = H^T(Hx − y)` for `D(x) = ½‖y − Hx‖²`.
pub fn gradient_data_term(op: &dyn LinearOperator, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = op.shape();
    check_len("y", y.len(), m)?;
    check_len("x", x.len(), n)?;
    let mut r = vec![0.0; m];
    op.apply_into(x, &mut r);
    r.iter_mut().zip(y).for_each(|(ri, yi)| *ri -= yi);
    let mut g = vec![0.0; n];
    op.apply_adjoint_into(&r, &mut g);
    Ok(g)
}

/// `½‖y − Hx‖²`.
pub fn data_fidelity(op: &dyn LinearOperator, y: &[f64], x: &[f64]) -> Result<f64> {
    let hx = op.apply(x)?;
    check_len("y", y.len(), hx.len())?;
    Ok(0.5 * vecops::dist_sq(&hx, y))
}
