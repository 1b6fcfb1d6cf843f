use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derive_seed, CutoffFamily, ProbeError};
use crate::discretization::GridOperator;
use crate::krylov::{cocg_shifted, SplitComplex};
use crate::par;

/// Relative residual for the `(H − i)w = v` solves.
pub const RESOLVENT_TOL: f64 = 1e-8;

/// `[H, φ_q]` as the first-order operator
/// `u ↦ −Σ_d c_d (2 ∂_dφ_q D_d u + ∂_d²φ_q u)`, with `c_d` the kinetic
/// coefficient of axis `d` and `D_d` the central difference.
#[derive(Debug, Clone)]
pub struct AssembledCommutator {
    strides: Vec<usize>,
    points: Vec<usize>,
    spacing: Vec<f64>,
    /// `−2 c_d ∂_dφ_q` per node, axis-major.
    drift: Vec<Vec<f64>>,
    /// `−Σ_d c_d ∂_d²φ_q` per node.
    diagonal: Vec<f64>,
    /// `φ_q` is constant on the grid.
    trivial: bool,
}

impl AssembledCommutator {
    pub fn new(op: &GridOperator, q: f64) -> Self {
        let g = &op.grid;
        let dims = g.dims();
        let coef: Vec<f64> = (0..dims)
            .map(|d| op.weights[d] * g.spacing[d] * g.spacing[d])
            .collect();
        let per_node = par::map_indexed(g.size(), |idx| CutoffFamily::derivatives(q, &g.node(idx)));
        let drift = (0..dims)
            .map(|d| {
                per_node
                    .iter()
                    .map(|(gr, _)| -2.0 * coef[d] * gr[d])
                    .collect()
            })
            .collect();
        let diagonal: Vec<f64> = per_node
            .iter()
            .map(|(_, sec)| -sec.iter().zip(&coef).map(|(s, c)| s * c).sum::<f64>())
            .collect();
        let trivial = per_node
            .iter()
            .all(|(gr, sec)| gr.iter().chain(sec).all(|&v| v == 0.0));
        Self {
            strides: (0..dims).map(|d| g.stride(d)).collect(),
            points: g.points.clone(),
            spacing: g.spacing.clone(),
            drift,
            diagonal,
            trivial,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        par::map_indexed(u.len(), |idx| {
            let mut acc = self.diagonal[idx] * u[idx];
            for d in 0..self.strides.len() {
                let c = self.drift[d][idx];
                if c == 0.0 {
                    continue;
                }
                let s = self.strides[d];
                let i = (idx / s) % self.points[d];
                let up = if i + 1 < self.points[d] {
                    u[idx + s]
                } else {
                    0.0
                };
                let down = if i > 0 { u[idx - s] } else { 0.0 };
                acc += c * (up - down) / (2.0 * self.spacing[d]);
            }
            acc
        })
    }
}

/// `H(φ_q u) − φ_q(Hu)` through the assembled matrix.
pub fn direct_commutator(op: &GridOperator, q: f64, u: &[f64]) -> Vec<f64> {
    let g = &op.grid;
    let phi = par::map_indexed(g.size(), |i| CutoffFamily::value(q, &g.node(i)));
    let phi_u: Vec<f64> = phi.iter().zip(u).map(|(a, b)| a * b).collect();
    let mut left = vec![0.0; u.len()];
    let mut right = vec![0.0; u.len()];
    op.apply_into(&phi_u, &mut left);
    op.apply_into(u, &mut right);
    left.iter()
        .zip(&right)
        .zip(&phi)
        .map(|((l, r), p)| l - p * r)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorEstimate {
    pub scale: f64,
    /// `max_v ‖[H, φ_q](H − i)⁻¹ v‖ / ‖v‖` over the probes: a lower estimate
    /// of the operator norm.
    pub estimate: f64,
    /// Worst relative residual of the resolvent solves.
    pub solve_residual: f64,
}

fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Monte-Carlo lower estimates of `‖[H, φ_q](H − i)⁻¹‖` for each scale.
///
/// A scale whose cutoff is identically 1 on the grid gives exactly 0. A scale
/// whose transition shell `q < ‖X‖ < 2q` is cut by the box is rejected.
pub fn commutator_decay(
    op: &GridOperator,
    family: &CutoffFamily,
    probes: usize,
    seed: u64,
) -> Result<Vec<CommutatorEstimate>, ProbeError> {
    if probes == 0 {
        return Err(ProbeError::NoProbes);
    }
    let g = &op.grid;
    let reach = g.min_half_width();
    let farthest = (0..g.size()).map(|i| g.radius(i)).fold(0.0, f64::max);
    let mut commutators = Vec::with_capacity(family.scales.len());
    for &q in &family.scales {
        if !(q > 0.0) {
            return Err(ProbeError::InvalidScale(q));
        }
        if q < farthest && 2.0 * q > reach {
            return Err(ProbeError::ScaleBeyondBox {
                scale: q,
                half_width: reach,
            });
        }
        commutators.push(AssembledCommutator::new(op, q));
    }
    let jobs = family.scales.len() * probes;
    let n = op.dim();
    let max_iter = 50 * n + 1000;
    let outcomes = par::map_indexed(jobs, |j| {
        let (qi, pi) = (j / probes, j % probes);
        let c = &commutators[qi];
        if c.is_trivial() {
            return Ok((0.0, 0.0));
        }
        let v = white_noise(n, derive_seed(seed, &[qi as u64, pi as u64]));
        let rhs = SplitComplex::from_real(&v);
        let (w, stats) = cocg_shifted(
            |x, y| op.apply_into(x, y),
            Complex64::new(0.0, 1.0),
            &rhs,
            RESOLVENT_TOL,
            max_iter,
        );
        if !stats.converged {
            return Err(ProbeError::SolveFailed {
                scale: family.scales[qi],
                residual: stats.relative_residual,
            });
        }
        let cr = c.apply(&w.re);
        let ci = c.apply(&w.im);
        let ratio = ((par::dot(&cr, &cr) + par::dot(&ci, &ci)) / par::dot(&v, &v)).sqrt();
        Ok((ratio, stats.relative_residual))
    });
    let outcomes = outcomes
        .into_iter()
        .collect::<Result<Vec<_>, ProbeError>>()?;
    Ok(family
        .scales
        .iter()
        .enumerate()
        .map(|(qi, &scale)| {
            let chunk = &outcomes[qi * probes..(qi + 1) * probes];
            CommutatorEstimate {
                scale,
                estimate: chunk.iter().map(|o| o.0).fold(0.0, f64::max),
                solve_residual: chunk.iter().map(|o| o.1).fold(0.0, f64::max),
            }
        })
        .collect())
}
