//! The dilation `U_θ ψ(x) = θ^{1/2} ψ(θx)` on 1D grid functions.

use super::{AnalyticError, UniformGrid1d};

#[derive(Debug, Clone, PartialEq)]
pub struct Dilated {
    pub values: Vec<f64>,
    /// Some `θx` fell outside the grid support and was taken as 0.
    pub clipped: bool,
}

/// Cubic Lagrange interpolation on the four nodes around `y`.
fn interpolate(grid: &UniformGrid1d, f: &[f64], y: f64) -> f64 {
    let n = f.len();
    let s = (y - grid.nodes[0]) / grid.spacing;
    let i = (s.floor() as isize).clamp(1, n as isize - 3) as usize;
    let t = s - i as f64;
    let (fm, f0, f1, f2) = (f[i - 1], f[i], f[i + 1], f[i + 2]);
    let lm = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let l0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let l1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let l2 = (t + 1.0) * t * (t - 1.0) / 6.0;
    lm * fm + l0 * f0 + l1 * f1 + l2 * f2
}

/// Resamples `θ^{1/2} f(θx)` onto the same grid. `θ = 1` is returned exactly.
pub fn apply_dilation(
    f: &[f64],
    grid: &UniformGrid1d,
    theta: f64,
) -> Result<Dilated, AnalyticError> {
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(AnalyticError::NonPositiveScale(theta));
    }
    if f.len() != grid.len() || grid.len() < 4 {
        return Err(AnalyticError::InadequateGrid(format!(
            "function has {} samples, grid has {} nodes (need at least 4)",
            f.len(),
            grid.len()
        )));
    }
    if theta == 1.0 {
        return Ok(Dilated {
            values: f.to_vec(),
            clipped: false,
        });
    }
    let lo = grid.nodes[0];
    let hi = *grid.nodes.last().expect("non-empty grid");
    let scale = theta.sqrt();
    let mut clipped = false;
    let values = grid
        .nodes
        .iter()
        .map(|&x| {
            let y = theta * x;
            if y < lo || y > hi {
                clipped = true;
                0.0
            } else {
                scale * interpolate(grid, f, y)
            }
        })
        .collect();
    Ok(Dilated { values, clipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: &UniformGrid1d) -> Vec<f64> {
        grid.sample(|x| (-0.5 * x * x).exp())
    }

    #[test]
    fn identity_at_one() {
        let g = UniformGrid1d::new(5.0, 0.1).unwrap();
        let f = gaussian(&g);
        let d = apply_dilation(&f, &g, 1.0).unwrap();
        assert_eq!(d.values, f);
        assert!(!d.clipped);
    }

    #[test]
    fn preserves_norm() {
        let g = UniformGrid1d::new(10.0, 0.01).unwrap();
        let f = gaussian(&g);
        let d = apply_dilation(&f, &g, 2.0).unwrap();
        assert!((g.norm(&d.values) - g.norm(&f)).abs() < 1e-6);
    }

    #[test]
    fn composition_is_multiplicative() {
        let g = UniformGrid1d::new(10.0, 0.01).unwrap();
        let f = gaussian(&g);
        let u3 = apply_dilation(&f, &g, 3.0).unwrap();
        let u23 = apply_dilation(&u3.values, &g, 2.0).unwrap();
        let u6 = apply_dilation(&f, &g, 6.0).unwrap();
        let err = u23
            .values
            .iter()
            .zip(&u6.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn exact_on_cubics() {
        let g = UniformGrid1d::new(2.0, 0.25).unwrap();
        let f = g.sample(|x| x * x * x - x);
        let d = apply_dilation(&f, &g, 0.7).unwrap();
        for (x, v) in g.nodes.iter().zip(&d.values) {
            let y = 0.7 * x;
            assert!((v - 0.7f64.sqrt() * (y * y * y - y)).abs() < 1e-12);
        }
    }

    #[test]
    fn flags_clipping_and_rejects_bad_theta() {
        let g = UniformGrid1d::new(5.0, 0.1).unwrap();
        let f = gaussian(&g);
        assert!(apply_dilation(&f, &g, 2.0).unwrap().clipped);
        assert!(!apply_dilation(&f, &g, 0.5).unwrap().clipped);
        assert!(apply_dilation(&f, &g, -1.0).is_err());
    }
}
