//! Per-iteration records and their CSV form.
//!
//! Header `t,cost,gap,wall_ms`; floats use Rust's shortest-round-trip-safe
//! `{:.16e}` (17 significant digits). `gap` is empty without `C*`, `wall_ms`
//! is empty when timing was off.

use std::io::{BufRead, Write};

use crate::error::{Result, TvError};

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    /// `C(x^t)`.
    pub cost: f64,
    /// `(C(x^t) − C*)/C*`.
    pub relative_gap: Option<f64>,
    pub wall_ms: Option<f64>,
    /// Nested proximal convergence flag (reference variants). Not serialized.
    pub inner_converged: Option<bool>,
}

pub const CSV_HEADER: &str = "t,cost,gap,wall_ms";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_records_csv(w: &mut impl Write, records: &[IterationRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{}",
            r.t,
            fmt_f64(r.cost),
            fmt_opt(r.relative_gap),
            fmt_opt(r.wall_ms)
        )?;
    }
    Ok(())
}

fn parse_opt(field: &str, line: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| TvError::Format(format!("line {line}: bad number {field:?}")))
}

pub fn read_records_csv(r: impl BufRead) -> Result<Vec<IterationRecord>> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?;
    if header.as_deref() != Some(CSV_HEADER) {
        return Err(TvError::Format(format!("expected header {CSV_HEADER:?}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        let [t, cost, gap, wall] = fields[..] else {
            return Err(TvError::Format(format!("line {lineno}: expected 4 fields")));
        };
        out.push(IterationRecord {
            t: t.parse()
                .map_err(|_| TvError::Format(format!("line {lineno}: bad t {t:?}")))?,
            cost: parse_opt(cost, lineno)?
                .ok_or_else(|| TvError::Format(format!("line {lineno}: missing cost")))?,
            relative_gap: parse_opt(gap, lineno)?,
            wall_ms: parse_opt(wall, lineno)?,
            inner_converged: None,
        });
    }
    Ok(out)
}
