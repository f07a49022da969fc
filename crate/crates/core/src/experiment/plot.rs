//! Hand-written SVG for relative-gap curves.
//!
//! The canvas is 800×500 px. The y axis is `log10` of the relative gap; gaps
//! at or below [`GAP_FLOOR`] (including exact zeros) are drawn at the floor.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, TvError};
use crate::solvers::records::IterationRecord;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;
pub const GAP_FLOOR: f64 = 1e-16;

const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// One curve: legend label and the records it is drawn from.
#[derive(Debug, Clone, Copy)]
pub struct Series<'a> {
    pub label: &'a str,
    pub records: &'a [IterationRecord],
}

/// Legend text for a step `γ = c/L`: `1/L`, `1/(4L)`, otherwise `c/L`.
pub fn fraction_label(c: f64) -> String {
    let inv = 1.0 / c;
    if c == 1.0 {
        "1/L".to_string()
    } else if inv.fract() == 0.0 && inv < 1e9 {
        format!("1/({}L)", inv as u64)
    } else {
        format!("{c}/L")
    }
}

fn log_gap(g: f64) -> f64 {
    g.max(GAP_FLOOR).log10()
}

pub fn render_gap_svg(series: &[Series<'_>]) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.records.is_empty()) {
        return Err(TvError::invalid("gap plot needs at least one record per run"));
    }
    let mut points: Vec<Vec<(f64, f64)>> = Vec::with_capacity(series.len());
    for s in series {
        let pts = s
            .records
            .iter()
            .map(|r| {
                r.relative_gap
                    .map(|g| (r.t as f64, log_gap(g)))
                    .ok_or_else(|| TvError::invalid(format!("run {:?} has no gaps (C* missing)", s.label)))
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(pts);
    }

    let all = points.iter().flatten();
    let (t_min, t_max) = all
        .clone()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y_lo, y_hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let y_lo = y_lo.floor();
    let y_hi = if y_hi.ceil() > y_lo { y_hi.ceil() } else { y_lo + 1.0 };
    let t_span = if t_max > t_min { t_max - t_min } else { 1.0 };

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + (t - t_min) / t_span * pw;
    let sy = |v: f64| TOP + (y_hi - v) / (y_hi - y_lo) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    // Decade ticks; thinned so at most ~10 labels appear.
    let decades = (y_hi - y_lo) as i64;
    let every = (decades / 10 + 1).max(1);
    for d in (y_lo as i64..=y_hi as i64).filter(|d| (d - y_lo as i64) % every == 0) {
        let y = sy(d as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    for i in 0..=4 {
        let t = t_min + t_span * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(t),
            TOP + ph + 18.0,
            t.round()
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration t</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">relative gap (C(x^t) - C*)/C*</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for (i, (ser, pts)) in series.iter().zip(&points).enumerate() {
        let color = COLORS[i % COLORS.len()];
        if pts.len() == 1 {
            let (t, v) = pts[0];
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(t),
                sy(v)
            );
        } else {
            let coords: Vec<String> = pts
                .iter()
                .map(|&(t, v)| format!("{:.2},{:.2}", sx(t), sy(v)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        }
        let ly = TOP + 16.0 + 18.0 * i as f64;
        let lx = LEFT + pw - 150.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#,
            ly - 4.0,
            lx + 24.0,
            ly - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#,
            lx + 30.0,
            escape(ser.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_gap_plot(series: &[Series<'_>], path: &Path) -> Result<()> {
    let svg = render_gap_svg(series)?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
