use serde::{Deserialize, Serialize};

use super::DiscretizationError;

/// Default cap on the total number of interior nodes.
pub const DEFAULT_SIZE_CAP: usize = 2_000_000;

/// Truncated tensor-product grid on `∏ [-Lᵢ, Lᵢ]` with `Nᵢ` interior nodes per
/// dimension and spacing `Δᵢ = 2Lᵢ/(Nᵢ+1)`.
///
/// Dimensions are ordered `x1..xn, y1..yp`. The flat node index is
/// lexicographic with dimension 0 varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub p: usize,
    pub half_widths: Vec<f64>,
    pub points: Vec<usize>,
    pub spacing: Vec<f64>,
    strides: Vec<usize>,
}

pub fn build_grid(
    n: usize,
    p: usize,
    half_widths: &[f64],
    points: &[usize],
) -> Result<Grid, DiscretizationError> {
    build_grid_with_cap(n, p, half_widths, points, DEFAULT_SIZE_CAP)
}

pub fn build_grid_with_cap(
    n: usize,
    p: usize,
    half_widths: &[f64],
    points: &[usize],
    cap: usize,
) -> Result<Grid, DiscretizationError> {
    let dims = n + p;
    if dims == 0 {
        return Err(DiscretizationError::InvalidCounts(
            "grid needs at least one dimension".into(),
        ));
    }
    if half_widths.len() != dims || points.len() != dims {
        return Err(DiscretizationError::InvalidCounts(format!(
            "expected {dims} half-widths and point counts, got {} and {}",
            half_widths.len(),
            points.len()
        )));
    }
    if let Some(d) = half_widths
        .iter()
        .position(|&l| !(l > 0.0 && l.is_finite()))
    {
        return Err(DiscretizationError::InvalidCounts(format!(
            "half-width {} of dimension {d} must be positive",
            half_widths[d]
        )));
    }
    if let Some(d) = points.iter().position(|&m| m < 3) {
        return Err(DiscretizationError::TooFewPoints {
            dim: d,
            points: points[d],
        });
    }
    let mut size: usize = 1;
    for &m in points {
        size = size
            .checked_mul(m)
            .filter(|&s| s <= cap)
            .ok_or(DiscretizationError::SizeCap {
                points: points.to_vec(),
                cap,
            })?;
    }
    let spacing = half_widths
        .iter()
        .zip(points)
        .map(|(l, &m)| 2.0 * l / (m as f64 + 1.0))
        .collect();
    let mut strides = Vec::with_capacity(dims);
    let mut s = 1;
    for &m in points {
        strides.push(s);
        s *= m;
    }
    Ok(Grid {
        n,
        p,
        half_widths: half_widths.to_vec(),
        points: points.to_vec(),
        spacing,
        strides,
    })
}

impl Grid {
    pub fn dims(&self) -> usize {
        self.n + self.p
    }

    pub fn size(&self) -> usize {
        self.points.iter().product()
    }

    pub fn stride(&self, dim: usize) -> usize {
        self.strides[dim]
    }

    /// Coordinate of interior node `i` (0-based) along `dim`.
    pub fn coord(&self, dim: usize, i: usize) -> f64 {
        -self.half_widths[dim] + (i as f64 + 1.0) * self.spacing[dim]
    }

    /// Per-dimension node indices of flat index `idx`.
    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        self.points
            .iter()
            .zip(&self.strides)
            .map(|(&m, &s)| (idx / s) % m)
            .collect()
    }

    pub fn node(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .into_iter()
            .enumerate()
            .map(|(d, i)| self.coord(d, i))
            .collect()
    }

    /// `‖X‖` at node `idx`.
    pub fn radius(&self, idx: usize) -> f64 {
        self.node(idx).iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Distance from the origin to the box corner.
    pub fn corner_radius(&self) -> f64 {
        self.half_widths.iter().map(|l| l * l).sum::<f64>().sqrt()
    }

    pub fn min_half_width(&self) -> f64 {
        self.half_widths
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    /// Cell volume `∏ Δᵢ`, the quadrature weight of a node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Stable identifier of the grid parameters.
    pub fn signature(&self) -> String {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        (self.n, self.p).hash(&mut h);
        self.points.hash(&mut h);
        for l in &self.half_widths {
            l.to_bits().hash(&mut h);
        }
        format!("{:016x}", h.finish())
    }
}
