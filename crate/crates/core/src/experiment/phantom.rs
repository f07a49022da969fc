//! Shepp-Logan phantom rasterization.
//!
//! Uses the modified (Toft) Shepp-Logan table, the higher-contrast variant
//! that common toolkits ship as their default phantom. Coordinates live on
//! `[−1, 1]²` with `x` to the right and `y` up; pixel `(row, col)` of an
//! `n × n` image is sampled at its center
//! `x = −1 + (2·col + 1)/n`, `y = 1 − (2·row + 1)/n`. A pixel's value is the
//! sum of the intensities of every ellipse containing its center, clamped to
//! `[0, 1]`.
//!
//! | intensity | semi-axis x | semi-axis y | center x | center y | angle (deg) |
//! |-----------|-------------|-------------|----------|----------|-------------|
//! |  1.0      | 0.69        | 0.92        |  0.0     |  0.0     |   0         |
//! | −0.8      | 0.6624      | 0.8740      |  0.0     | −0.0184  |   0         |
//! | −0.2      | 0.1100      | 0.3100      |  0.22    |  0.0     | −18         |
//! | −0.2      | 0.1600      | 0.4100      | −0.22    |  0.0     |  18         |
//! |  0.1      | 0.2100      | 0.2500      |  0.0     |  0.35    |   0         |
//! |  0.1      | 0.0460      | 0.0460      |  0.0     |  0.1     |   0         |
//! |  0.1      | 0.0460      | 0.0460      |  0.0     | −0.1     |   0         |
//! |  0.1      | 0.0460      | 0.0230      | −0.08    | −0.605   |   0         |
//! |  0.1      | 0.0230      | 0.0230      |  0.0     | −0.606   |   0         |
//! |  0.1      | 0.0230      | 0.0460      |  0.06    | −0.605   |   0         |

use crate::error::{Result, TvError};
use crate::grid::SignalGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub intensity: f64,
    pub semi_x: f64,
    pub semi_y: f64,
    pub center_x: f64,
    pub center_y: f64,
    pub angle_deg: f64,
}

impl Ellipse {
    const fn new(intensity: f64, semi_x: f64, semi_y: f64, center_x: f64, center_y: f64, angle_deg: f64) -> Self {
        Self {
            intensity,
            semi_x,
            semi_y,
            center_x,
            center_y,
            angle_deg,
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (s, c) = self.angle_deg.to_radians().sin_cos();
        let (dx, dy) = (x - self.center_x, y - self.center_y);
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.semi_x).powi(2) + (v / self.semi_y).powi(2) <= 1.0
    }
}

pub const SHEPP_LOGAN: [Ellipse; 10] = [
    Ellipse::new(1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    Ellipse::new(-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    Ellipse::new(-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    Ellipse::new(-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    Ellipse::new(0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    Ellipse::new(0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    Ellipse::new(0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    Ellipse::new(0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    Ellipse::new(0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    Ellipse::new(0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
];

/// Unclamped sum of intensities of the ellipses containing `(x, y)`.
pub fn ellipse_sum(ellipses: &[Ellipse], x: f64, y: f64) -> f64 {
    ellipses
        .iter()
        .filter(|e| e.contains(x, y))
        .map(|e| e.intensity)
        .sum()
}

/// Center of pixel `(row, col)` in an `n × n` raster.
pub fn pixel_center(n: usize, row: usize, col: usize) -> (f64, f64) {
    let n = n as f64;
    (
        -1.0 + (2 * col + 1) as f64 / n,
        1.0 - (2 * row + 1) as f64 / n,
    )
}

/// Rasterizes `ellipses` on an `n × n` grid without clamping.
pub fn rasterize(n: usize, ellipses: &[Ellipse]) -> Result<SignalGrid> {
    let data = (0..n * n)
        .map(|i| {
            let (x, y) = pixel_center(n, i / n, i % n);
            ellipse_sum(ellipses, x, y)
        })
        .collect();
    SignalGrid::from_vec(&[n, n], data)
}

/// The `n × n` Shepp-Logan phantom, values clamped to `[0, 1]`.
pub fn shepp_logan(n: usize) -> Result<SignalGrid> {
    if n < 8 || n % 2 != 0 {
        return Err(TvError::invalid(format!(
            "phantom size must be even and >= 8, got {n}"
        )));
    }
    let mut g = rasterize(n, &SHEPP_LOGAN)?;
    g.data_mut().iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(g)
}
