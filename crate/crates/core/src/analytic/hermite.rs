//! Hermite functions `Ψ_p = C_p H_p e^{−x²/2}`, `C_p = (√π 2^p p!)^{−1/2}`,
//! evaluated through the normalized three-term recurrence
//! `Ψ_{p+1} = x√(2/(p+1)) Ψ_p − √(p/(p+1)) Ψ_{p−1}`.

use serde::{Deserialize, Serialize};

use super::AnalyticError;

/// `π^{−1/4}`
pub const PSI0_AT_ORIGIN: f64 = 0.751_125_544_464_942_5;

const RESCALE: f64 = 1e150;

/// `Ψ_p(x)`. The polynomial part is run with periodic rescaling and the
/// Gaussian is applied once at the end, so deep tails underflow cleanly to 0.
pub fn hermite_function(p: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PSI0_AT_ORIGIN;
    let mut log_scale = 0.0;
    for k in 0..p {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
    }
    if cur == 0.0 {
        return 0.0;
    }
    let exponent = cur.abs().ln() + log_scale - 0.5 * x * x;
    cur.signum() * exponent.exp()
}

/// Physicists' Hermite polynomial via `H_{p+1} = 2x H_p − 2p H_{p−1}`.
pub fn hermite_polynomial(p: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..p {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Uniform 1D grid `x_i = −L + iΔ`, `i = 0..=2L/Δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid1d {
    pub half_width: f64,
    pub spacing: f64,
    pub nodes: Vec<f64>,
}

impl UniformGrid1d {
    pub fn new(half_width: f64, spacing: f64) -> Result<Self, AnalyticError> {
        if !(half_width > 0.0 && spacing > 0.0 && spacing < half_width) {
            return Err(AnalyticError::InadequateGrid(format!(
                "half-width {half_width} and spacing {spacing} do not define a grid"
            )));
        }
        let count = (2.0 * half_width / spacing + 1e-9).floor() as usize + 1;
        let nodes = (0..count)
            .map(|i| -half_width + i as f64 * spacing)
            .collect();
        Ok(Self {
            half_width,
            spacing,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Rectangle-rule `L²` norm.
    pub fn norm(&self, f: &[f64]) -> f64 {
        (self.spacing * f.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.spacing * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }
}

/// `Ψ_0..Ψ_P` sampled on a grid.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    pub max_order: usize,
    pub grid: UniformGrid1d,
    pub values: Vec<Vec<f64>>,
}

impl HermiteBasis {
    pub fn new(max_order: usize, grid: UniformGrid1d) -> Self {
        let values = (0..=max_order)
            .map(|p| grid.sample(|x| hermite_function(p, x)))
            .collect();
        Self {
            max_order,
            grid,
            values,
        }
    }

    /// Quadrature Gram matrix `⟨Ψ_p, Ψ_q⟩`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.values
            .iter()
            .map(|a| self.values.iter().map(|b| self.grid.inner(a, b)).collect())
            .collect()
    }

    /// `max |⟨Ψ_p, Ψ_q⟩ − δ_pq|`.
    pub fn gram_defect(&self) -> f64 {
        let g = self.gram();
        let mut worst: f64 = 0.0;
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}

/// Fourth-order central first derivative at interior nodes `2..len-2`;
/// the two outermost nodes on each side are left at 0.
fn derivative4(f: &[f64], h: f64) -> Vec<f64> {
    let mut d = vec![0.0; f.len()];
    for i in 2..f.len().saturating_sub(2) {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    }
    d
}

fn second_derivative4(f: &[f64], h: f64) -> Vec<f64> {
    let mut d = vec![0.0; f.len()];
    for i in 2..f.len().saturating_sub(2) {
        d[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2])
            / (12.0 * h * h);
    }
    d
}

fn interior_norm(grid: &UniformGrid1d, f: &[f64]) -> f64 {
    let n = f.len();
    grid.norm(&f[2..n - 2])
}

fn check_ladder_grid(p: usize, grid: &UniformGrid1d) -> Result<(), AnalyticError> {
    let needed = (2.0 * p as f64 + 3.0).sqrt() + 4.0;
    if grid.spacing > 0.05 || grid.half_width < needed || grid.len() < 5 {
        return Err(AnalyticError::InadequateGrid(format!(
            "order {p} needs spacing ≤ 0.05 and half-width ≥ {needed:.3}, got spacing {} and half-width {}",
            grid.spacing, grid.half_width
        )));
    }
    Ok(())
}

/// Relative residual of the raising relation
/// `(−d/dx + x)Ψ_p = √(2(p+1)) Ψ_{p+1}` on the grid.
pub fn ladder_check(p: usize, grid: &UniformGrid1d) -> Result<f64, AnalyticError> {
    check_ladder_grid(p, grid)?;
    let psi = grid.sample(|x| hermite_function(p, x));
    let next = grid.sample(|x| hermite_function(p + 1, x));
    let d = derivative4(&psi, grid.spacing);
    let c = (2.0 * (p as f64 + 1.0)).sqrt();
    let resid: Vec<f64> = (0..psi.len())
        .map(|i| -d[i] + grid.nodes[i] * psi[i] - c * next[i])
        .collect();
    Ok(interior_norm(grid, &resid) / interior_norm(grid, &next))
}

/// `‖(d/dx + x)Ψ_0‖` on the grid.
pub fn annihilation_residual(grid: &UniformGrid1d) -> Result<f64, AnalyticError> {
    check_ladder_grid(0, grid)?;
    let psi = grid.sample(|x| hermite_function(0, x));
    let d = derivative4(&psi, grid.spacing);
    let resid: Vec<f64> = (0..psi.len())
        .map(|i| d[i] + grid.nodes[i] * psi[i])
        .collect();
    Ok(interior_norm(grid, &resid))
}

/// `‖(−d²/dx² + x²)Ψ_p − (2p+1)Ψ_p‖ / ‖Ψ_p‖` with a fourth-order second derivative.
pub fn eigen_relation_residual(p: usize, grid: &UniformGrid1d) -> Result<f64, AnalyticError> {
    check_ladder_grid(p, grid)?;
    let psi = grid.sample(|x| hermite_function(p, x));
    let d2 = second_derivative4(&psi, grid.spacing);
    let e = 2.0 * p as f64 + 1.0;
    let resid: Vec<f64> = (0..psi.len())
        .map(|i| -d2[i] + grid.nodes[i] * grid.nodes[i] * psi[i] - e * psi[i])
        .collect();
    Ok(interior_norm(grid, &resid) / interior_norm(grid, &psi))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Coefficients of `H_p` built literally from `H_{p+1} = (−d/dx + 2x) H_p`.
    fn raising_coefficients(p: usize) -> Vec<f64> {
        let mut c = vec![1.0];
        for _ in 0..p {
            let mut next = vec![0.0; c.len() + 1];
            for (k, &a) in c.iter().enumerate() {
                next[k + 1] += 2.0 * a;
                if k > 0 {
                    next[k - 1] -= k as f64 * a;
                }
            }
            c = next;
        }
        c
    }

    fn factorial(p: usize) -> f64 {
        (1..=p).map(|k| k as f64).product()
    }

    #[test]
    fn ground_state_at_origin() {
        let expected = 1.0 / std::f64::consts::PI.sqrt().sqrt();
        assert!((hermite_function(0, 0.0) - expected).abs() < 1e-15);
        assert!((PSI0_AT_ORIGIN - expected).abs() < 1e-15);
        assert!((hermite_function(0, 0.0) - 0.751126).abs() < 1e-6);
    }

    #[test]
    fn first_state_is_odd() {
        assert_eq!(hermite_function(1, 0.0), 0.0);
        assert_eq!(hermite_polynomial(1, 3.0), 6.0);
    }

    #[test]
    fn recurrence_matches_raising_definition() {
        for p in 0..=12 {
            let c = raising_coefficients(p);
            let cp =
                1.0 / (std::f64::consts::PI.sqrt() * 2f64.powi(p as i32) * factorial(p)).sqrt();
            for &x in &[-2.5f64, -0.3, 0.0, 0.7, 1.9, 3.2] {
                let poly: f64 = c
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * x.powi(k as i32))
                    .sum();
                assert!((hermite_polynomial(p, x) - poly).abs() <= 1e-10 * poly.abs().max(1.0));
                let psi = cp * poly * (-0.5 * x * x).exp();
                assert!((hermite_function(p, x) - psi).abs() < 1e-12, "p={p} x={x}");
            }
        }
    }

    #[test]
    fn large_order_stays_finite() {
        for &x in &[-30.0, -12.0, 0.5, 14.0, 30.0] {
            let v = hermite_function(200, x);
            assert!(v.is_finite() && v.abs() < 1.0);
        }
        assert_eq!(hermite_function(3, 60.0), 0.0);
    }

    #[test]
    fn ladder_rejects_coarse_grid() {
        let g = UniformGrid1d::new(10.0, 0.1).unwrap();
        assert!(matches!(
            ladder_check(0, &g),
            Err(AnalyticError::InadequateGrid(_))
        ));
        let narrow = UniformGrid1d::new(5.0, 0.01).unwrap();
        assert!(ladder_check(10, &narrow).is_err());
    }

    #[test]
    fn ladder_low_orders() {
        let g = UniformGrid1d::new(12.0, 0.01).unwrap();
        assert!(ladder_check(0, &g).unwrap() <= 1e-5);
        assert!(annihilation_residual(&g).unwrap() <= 1e-5);
        assert!(ladder_check(10, &g).unwrap() <= 1e-5);
    }
}
