//! Binary file formats.
//!
//! * Grids: 8-byte magic `TVGRID01`, a header line `dims=<d1>x<d2>[x<d3>]`
//!   (optionally followed by ` k=<index>` for frame-coefficient dumps) ending
//!   in `\n`, then the row-major data as little-endian `f64`.
//! * Dense operators: magic `TVMAT001`, header `shape=<M>x<N>\n`, then
//!   row-major little-endian `f64`.
//! * Images: binary 16-bit PGM (`P5`, maxval 65535, big-endian samples),
//!   linearly mapped from the data range onto `[0, 65535]`. 2-D grids are
//!   written as `dims[0]` rows of `dims[1]` pixels, 1-D grids as a single row.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, TvError};
use crate::frame::FrameCoefficients;
use crate::grid::SignalGrid;
use crate::operators::{DenseOperator, LinearOperator};

pub const GRID_MAGIC: &[u8; 8] = b"TVGRID01";
pub const MATRIX_MAGIC: &[u8; 8] = b"TVMAT001";

fn join_dims(dims: &[usize]) -> String {
    dims.iter().map(usize::to_string).collect::<Vec<_>>().join("x")
}

fn write_f64s(w: &mut impl Write, data: &[f64]) -> Result<()> {
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|e| TvError::Format(format!("truncated payload: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(TvError::Format("trailing bytes after payload".into()));
    }
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn read_magic(r: &mut impl Read, magic: &[u8; 8]) -> Result<()> {
    let mut got = [0u8; 8];
    r.read_exact(&mut got)
        .map_err(|_| TvError::Format("file too short for magic".into()))?;
    if &got != magic {
        return Err(TvError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

fn read_header_line(r: &mut impl Read) -> Result<String> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte)? == 0 {
            return Err(TvError::Format("unterminated header line".into()));
        }
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 256 {
            return Err(TvError::Format("header line too long".into()));
        }
    }
    String::from_utf8(line).map_err(|_| TvError::Format("header is not UTF-8".into()))
}

fn parse_extent(s: &str) -> Result<Vec<usize>> {
    s.split('x')
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| TvError::Format(format!("bad extent {t:?}")))
        })
        .collect()
}

pub fn write_grid(w: &mut impl Write, grid: &SignalGrid) -> Result<()> {
    w.write_all(GRID_MAGIC)?;
    writeln!(w, "dims={}", join_dims(grid.dims()))?;
    write_f64s(w, grid.data())
}

pub fn write_coefficients(w: &mut impl Write, coeffs: &FrameCoefficients) -> Result<()> {
    w.write_all(GRID_MAGIC)?;
    writeln!(w, "dims={} k={}", join_dims(coeffs.grid.dims()), coeffs.k)?;
    write_f64s(w, coeffs.grid.data())
}

/// Reads a grid; the `k` tag is returned when the file is a coefficient dump.
pub fn read_grid(r: &mut impl Read) -> Result<(SignalGrid, Option<usize>)> {
    read_magic(r, GRID_MAGIC)?;
    let header = read_header_line(r)?;
    let mut parts = header.split(' ');
    let dims_part = parts.next().unwrap_or_default();
    let dims = parse_extent(
        dims_part
            .strip_prefix("dims=")
            .ok_or_else(|| TvError::Format(format!("bad grid header {header:?}")))?,
    )?;
    let k = match parts.next() {
        None => None,
        Some(tag) => Some(
            tag.strip_prefix("k=")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| TvError::Format(format!("bad header extension {tag:?}")))?,
        ),
    };
    if parts.next().is_some() {
        return Err(TvError::Format(format!("unexpected header fields in {header:?}")));
    }
    let n = crate::grid::validate_dims(&dims).map_err(|e| TvError::Format(e.to_string()))?;
    let data = read_f64s(r, n)?;
    let grid = SignalGrid::from_vec(&dims, data).map_err(|e| TvError::Format(e.to_string()))?;
    Ok((grid, k))
}

pub fn write_matrix(w: &mut impl Write, op: &DenseOperator) -> Result<()> {
    let (m, n) = op.shape();
    w.write_all(MATRIX_MAGIC)?;
    writeln!(w, "shape={m}x{n}")?;
    write_f64s(w, op.entries())
}

pub fn read_matrix(r: &mut impl Read) -> Result<DenseOperator> {
    read_magic(r, MATRIX_MAGIC)?;
    let header = read_header_line(r)?;
    let shape = parse_extent(
        header
            .strip_prefix("shape=")
            .ok_or_else(|| TvError::Format(format!("bad matrix header {header:?}")))?,
    )?;
    let [m, n] = shape[..] else {
        return Err(TvError::Format(format!("matrix shape must be MxN, got {header:?}")));
    };
    let data = read_f64s(r, m * n)?;
    DenseOperator::from_row_major(m, n, data).map_err(|e| TvError::Format(e.to_string()))
}

/// 16-bit binary PGM, linearly scaled over the data range. A constant grid
/// maps to all zeros.
pub fn write_pgm(w: &mut impl Write, grid: &SignalGrid) -> Result<()> {
    let (height, width) = match grid.dims() {
        [n] => (1, *n),
        [rows, cols] => (*rows, *cols),
        dims => {
            return Err(TvError::invalid(format!(
                "PGM export supports 1-D and 2-D grids, got dims {dims:?}"
            )))
        }
    };
    let (lo, hi) = grid.min_max();
    let span = hi - lo;
    write!(w, "P5\n{width} {height}\n65535\n")?;
    for &v in grid.data() {
        let level = if span > 0.0 {
            ((v - lo) / span * 65535.0).round() as u16
        } else {
            0
        };
        w.write_all(&level.to_be_bytes())?;
    }
    Ok(())
}

pub fn save_grid(path: &Path, grid: &SignalGrid) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_grid(&mut w, grid)?;
    w.flush()?;
    Ok(())
}

pub fn load_grid(path: &Path) -> Result<SignalGrid> {
    let mut r = BufReader::new(File::open(path)?);
    Ok(read_grid(&mut r)?.0)
}

pub fn save_pgm(path: &Path, grid: &SignalGrid) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pgm(&mut w, grid)?;
    w.flush()?;
    Ok(())
}

pub fn save_matrix(path: &Path, op: &DenseOperator) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix(&mut w, op)?;
    w.flush()?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<DenseOperator> {
    let mut r = BufReader::new(File::open(path)?);
    read_matrix(&mut r)
}
