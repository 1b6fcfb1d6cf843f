use serde::{Deserialize, Serialize};

use super::{solve, EigenError, SolverOptions};
use crate::discretization::{assemble_hamiltonian, build_grid, Grid};
use crate::potential::Potential;

/// Fixed physics; only the number of points per axis varies.
#[derive(Debug, Clone)]
pub struct GridFamily {
    pub n: usize,
    pub p: usize,
    pub half_widths: Vec<f64>,
    pub potential: Potential,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Reference {
    /// Exact continuum eigenvalues, ascending, repeated by multiplicity.
    Analytic(Vec<f64>),
    /// Exact eigenvalues of the discrete free Laplacian on each grid (V = 0 only).
    ExactLaplacian,
    /// Extrapolation from the two finest grids assuming second order.
    Richardson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub points: usize,
    pub spacing: f64,
    pub eigenvalues: Vec<f64>,
    pub errors: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub entries: Vec<ConvergenceEntry>,
    /// Per-eigenvalue log-log slope of error against spacing; `None` when
    /// fewer than two errors sit above round-off.
    pub slopes: Vec<Option<f64>>,
    /// Per-eigenvalue `max |error| / Δ²` over the study.
    pub error_constants: Vec<f64>,
}

impl ConvergenceStudy {
    /// Error bound `factor · C_j · Δ²` for eigenvalue `j` at spacing `spacing`.
    pub fn tolerance(&self, j: usize, spacing: f64, factor: f64) -> f64 {
        factor * self.error_constants[j] * spacing * spacing
    }
}

/// Relative level below which an error is treated as round-off.
const ROUNDOFF: f64 = 1e-9;

/// `k` smallest eigenvalues of the discrete free operator: sums of the 1D
/// Dirichlet eigenvalues `c (2 − 2cos(jπ/(N+1)))/Δ²` per axis.
pub(crate) fn free_laplacian_eigenvalues(grid: &Grid, h: f64, k: usize) -> Vec<f64> {
    let mut sums = vec![0.0];
    for d in 0..grid.dims() {
        let c = if d < grid.n { h * h } else { 1.0 };
        let m = grid.points[d];
        let dx = grid.spacing[d];
        let axis: Vec<f64> = (1..=k.min(m))
            .map(|j| {
                c * (2.0 - 2.0 * (j as f64 * std::f64::consts::PI / (m as f64 + 1.0)).cos())
                    / (dx * dx)
            })
            .collect();
        let mut next: Vec<f64> = sums
            .iter()
            .flat_map(|s| axis.iter().map(move |a| s + a))
            .collect();
        next.sort_by(f64::total_cmp);
        next.truncate(k);
        sums = next;
    }
    sums
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Solves the family at every size and fits per-eigenvalue convergence
/// slopes. `opts.k` is overridden by `k`.
pub fn convergence_study(
    family: &GridFamily,
    sizes: &[usize],
    k: usize,
    reference: &Reference,
    opts: &SolverOptions,
) -> Result<ConvergenceStudy, EigenError> {
    if sizes.len() < 3 {
        return Err(EigenError::TooFewSizes(sizes.len()));
    }
    if let Reference::Analytic(r) = reference {
        if r.len() < k {
            return Err(EigenError::ReferenceTooShort {
                needed: k,
                found: r.len(),
            });
        }
    }
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    let opts = SolverOptions { k, ..opts.clone() };
    let mut entries = Vec::with_capacity(sizes.len());
    for &m in &sizes {
        let points = vec![m; family.n + family.p];
        let grid = build_grid(family.n, family.p, &family.half_widths, &points)?;
        let op = assemble_hamiltonian(&grid, &family.potential, family.h)?;
        let result = solve(&op, &opts)?;
        let errors = match reference {
            Reference::Analytic(r) => result
                .eigenvalues
                .iter()
                .zip(r)
                .map(|(a, b)| (a - b).abs())
                .collect(),
            Reference::ExactLaplacian => result
                .eigenvalues
                .iter()
                .zip(free_laplacian_eigenvalues(&grid, family.h, k))
                .map(|(a, b)| (a - b).abs())
                .collect(),
            Reference::Richardson => Vec::new(),
        };
        entries.push(ConvergenceEntry {
            points: m,
            spacing: grid.max_spacing(),
            converged: result.all_converged(),
            eigenvalues: result.eigenvalues,
            errors,
        });
    }
    if *reference == Reference::Richardson {
        let fine = &entries[entries.len() - 1];
        let coarse = &entries[entries.len() - 2];
        let ratio = (coarse.spacing / fine.spacing).powi(2);
        let extrapolated: Vec<f64> = fine
            .eigenvalues
            .iter()
            .zip(&coarse.eigenvalues)
            .map(|(f, c)| f + (f - c) / (ratio - 1.0))
            .collect();
        for e in &mut entries {
            e.errors = e
                .eigenvalues
                .iter()
                .zip(&extrapolated)
                .map(|(a, b)| (a - b).abs())
                .collect();
        }
    }
    let count = entries.iter().map(|e| e.errors.len()).min().unwrap_or(0);
    let mut slopes = Vec::with_capacity(count);
    let mut error_constants = Vec::with_capacity(count);
    for j in 0..count {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut c: f64 = 0.0;
        for e in &entries {
            let err = e.errors[j];
            c = c.max(err / (e.spacing * e.spacing));
            if err > ROUNDOFF * e.eigenvalues[j].abs().max(1.0) {
                xs.push(e.spacing.ln());
                ys.push(err.ln());
            }
        }
        slopes.push(if xs.len() == entries.len() {
            fit_slope(&xs, &ys)
        } else {
            None
        });
        error_constants.push(c);
    }
    Ok(ConvergenceStudy {
        entries,
        slopes,
        error_constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SolverOptions {
        SolverOptions::new(1, 1e-10, 50_000, 0)
    }

    fn oscillator() -> GridFamily {
        GridFamily {
            n: 1,
            p: 0,
            half_widths: vec![8.0],
            potential: Potential::radial_square(1, 0),
            h: 1.0,
        }
    }

    #[test]
    fn oscillator_is_second_order() {
        let s = convergence_study(
            &oscillator(),
            &[100, 200, 400],
            2,
            &Reference::Analytic(vec![1.0, 3.0]),
            &opts(),
        )
        .unwrap();
        for slope in &s.slopes {
            let slope = slope.unwrap();
            assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
        }
        // 1D oscillator: error ≈ (Δ²/12)·(3/4)(2n²+2n+1)
        assert!((s.error_constants[0] - 0.0625).abs() < 0.01);
    }

    #[test]
    fn richardson_recovers_second_order() {
        let s = convergence_study(
            &oscillator(),
            &[100, 200, 400, 800],
            1,
            &Reference::Richardson,
            &opts(),
        )
        .unwrap();
        let slope = s.slopes[0].unwrap();
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn free_laplacian_reference_is_roundoff() {
        let family = GridFamily {
            n: 1,
            p: 1,
            half_widths: vec![3.0, 3.0],
            potential: Potential::zero(1, 1),
            h: 0.5,
        };
        let s = convergence_study(
            &family,
            &[20, 24, 28],
            3,
            &Reference::ExactLaplacian,
            &opts(),
        )
        .unwrap();
        assert!(s.slopes.iter().all(Option::is_none));
    }

    #[test]
    fn needs_three_sizes() {
        let r = convergence_study(
            &oscillator(),
            &[100, 200],
            1,
            &Reference::Richardson,
            &opts(),
        );
        assert!(matches!(r, Err(EigenError::TooFewSizes(2))));
    }
}
