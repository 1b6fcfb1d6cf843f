//! Finite-difference discretization of `H(h) = −h²Δₓ − Δ_y + V(x, y)` on a
//! truncated box with Dirichlet boundary conditions.
//!
//! Each dimension uses the second-order central stencil
//! `(−u_{i−1} + 2u_i − u_{i+1})/Δ²`; x-dimension stencils carry the factor
//! `h²`. Nodes outside the box are implicitly zero.

mod grid;
mod sparse;

pub use grid::{build_grid, build_grid_with_cap, Grid, DEFAULT_SIZE_CAP};
pub use sparse::CsrMatrix;

use std::io::{self, Write};

use crate::par;
use crate::potential::{Potential, PotentialError};

/// Default upper bound `h₀` of the semiclassical parameter.
pub const DEFAULT_H0: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiscretizationError {
    #[error("invalid grid: {0}")]
    InvalidCounts(String),
    #[error("dimension {dim} has {points} interior points, need at least 3")]
    TooFewPoints { dim: usize, points: usize },
    #[error("grid {points:?} exceeds the size cap of {cap} nodes")]
    SizeCap { points: Vec<usize>, cap: usize },
    #[error("potential has (n, p) = {potential:?} but grid has {grid:?}")]
    DimensionMismatch {
        potential: (usize, usize),
        grid: (usize, usize),
    },
    #[error("semiclassical parameter h = {h} must lie in (0, {h0}]")]
    InvalidH { h: f64, h0: f64 },
    #[error("potential evaluation failed at node {node}: {source}")]
    Potential { node: usize, source: PotentialError },
    #[error("vector has length {found}, operator dimension is {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

/// Assembled sparse Hamiltonian on a grid. Immutable after assembly.
#[derive(Debug, Clone)]
pub struct GridOperator {
    pub grid: Grid,
    pub h: f64,
    pub matrix: CsrMatrix,
    /// `V` at every node, in node order.
    pub potential_values: Vec<f64>,
    /// Per-dimension stencil weight: `h²/Δ²` for x, `1/Δ²` for y.
    pub weights: Vec<f64>,
    pub nonnegative_claimed: bool,
}

pub fn assemble_hamiltonian(
    grid: &Grid,
    pot: &Potential,
    h: f64,
) -> Result<GridOperator, DiscretizationError> {
    assemble_hamiltonian_with_h0(grid, pot, h, DEFAULT_H0)
}

pub fn assemble_hamiltonian_with_h0(
    grid: &Grid,
    pot: &Potential,
    h: f64,
    h0: f64,
) -> Result<GridOperator, DiscretizationError> {
    if (pot.n, pot.p) != (grid.n, grid.p) {
        return Err(DiscretizationError::DimensionMismatch {
            potential: (pot.n, pot.p),
            grid: (grid.n, grid.p),
        });
    }
    if !(h > 0.0 && h <= h0) {
        return Err(DiscretizationError::InvalidH { h, h0 });
    }
    let weights: Vec<f64> = (0..grid.dims())
        .map(|d| {
            let s = if d < grid.n { h * h } else { 1.0 };
            s / (grid.spacing[d] * grid.spacing[d])
        })
        .collect();
    let values = par::map_indexed(grid.size(), |idx| {
        pot.eval(&grid.node(idx))
            .map_err(|source| DiscretizationError::Potential { node: idx, source })
    });
    let potential_values = values.into_iter().collect::<Result<Vec<f64>, _>>()?;
    let diag_kinetic: f64 = weights.iter().map(|w| 2.0 * w).sum();
    let rows = par::map_indexed(grid.size(), |idx| {
        let mi = grid.multi_index(idx);
        let mut row = Vec::with_capacity(2 * grid.dims() + 1);
        for d in 0..grid.dims() {
            if mi[d] > 0 {
                row.push((idx - grid.stride(d), -weights[d]));
            }
            if mi[d] + 1 < grid.points[d] {
                row.push((idx + grid.stride(d), -weights[d]));
            }
        }
        row.push((idx, diag_kinetic + potential_values[idx]));
        row.sort_by_key(|&(c, _)| c);
        row
    });
    Ok(GridOperator {
        grid: grid.clone(),
        h,
        matrix: CsrMatrix::from_rows(rows),
        potential_values,
        weights,
        nonnegative_claimed: pot.nonnegative_claimed,
    })
}

/// `H v`.
pub fn matvec(op: &GridOperator, v: &[f64]) -> Result<Vec<f64>, DiscretizationError> {
    op.apply(v)
}

/// Multiplication by the indicator of the closed ball `‖X‖ ≤ radius`.
pub fn restrict(v: &[f64], grid: &Grid, radius: f64) -> Result<Vec<f64>, DiscretizationError> {
    if v.len() != grid.size() {
        return Err(DiscretizationError::LengthMismatch {
            expected: grid.size(),
            found: v.len(),
        });
    }
    let mut out = v.to_vec();
    par::fill_indexed(
        &mut out,
        |i| if grid.radius(i) > radius { 0.0 } else { v[i] },
    );
    Ok(out)
}

impl GridOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    fn check_len(&self, v: &[f64]) -> Result<(), DiscretizationError> {
        if v.len() != self.dim() {
            return Err(DiscretizationError::LengthMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, DiscretizationError> {
        self.check_len(v)?;
        let mut out = vec![0.0; self.dim()];
        self.matrix.mul_vec_into(v, &mut out);
        Ok(out)
    }

    /// `y = H x` without length checks; callers guarantee sizes.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.mul_vec_into(x, y);
    }

    /// `⟨u, H u⟩` through the assembled matrix.
    pub fn quadratic_form(&self, u: &[f64]) -> Result<f64, DiscretizationError> {
        let hu = self.apply(u)?;
        Ok(par::dot(u, &hu))
    }

    /// `h²‖Dₓu‖² + ‖D_y u‖²` summed over grid edges, including the edges to
    /// the zero Dirichlet boundary. Computed from forward differences, not from
    /// the matrix.
    pub fn kinetic_form(&self, u: &[f64]) -> Result<f64, DiscretizationError> {
        self.check_len(u)?;
        let g = &self.grid;
        let per_node = par::map_indexed(u.len(), |idx| {
            let mi = g.multi_index(idx);
            let mut acc = 0.0;
            for d in 0..g.dims() {
                let next = if mi[d] + 1 < g.points[d] {
                    u[idx + g.stride(d)]
                } else {
                    0.0
                };
                let diff = next - u[idx];
                acc += self.weights[d] * diff * diff;
                if mi[d] == 0 {
                    acc += self.weights[d] * u[idx] * u[idx];
                }
            }
            acc
        });
        Ok(per_node
            .chunks(par::CHUNK)
            .map(|c| c.iter().sum::<f64>())
            .sum())
    }

    /// `⟨V u, u⟩`.
    pub fn potential_form(&self, u: &[f64]) -> Result<f64, DiscretizationError> {
        self.check_len(u)?;
        let vu: Vec<f64> = u
            .iter()
            .zip(&self.potential_values)
            .map(|(a, v)| a * v)
            .collect();
        Ok(par::dot(&vu, u))
    }

    /// Kinetic part only: `(−h²Δₓ − Δ_y) u`.
    pub fn apply_kinetic(&self, u: &[f64]) -> Result<Vec<f64>, DiscretizationError> {
        let mut out = self.apply(u)?;
        for ((o, v), x) in out.iter_mut().zip(&self.potential_values).zip(u) {
            *o -= v * x;
        }
        Ok(out)
    }

    pub fn one_norm(&self) -> f64 {
        self.matrix.one_norm()
    }

    pub fn min_potential(&self) -> f64 {
        self.potential_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest `V` over nodes on the outermost layer of the box.
    pub fn min_boundary_potential(&self) -> f64 {
        let g = &self.grid;
        (0..g.size())
            .filter(|&i| {
                g.multi_index(i)
                    .iter()
                    .zip(&g.points)
                    .any(|(&k, &m)| k == 0 || k + 1 == m)
            })
            .map(|i| self.potential_values[i])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_triplets<W: Write>(&self, w: W) -> io::Result<()> {
        self.matrix.write_triplets(w)
    }
}
