//! Lowest eigenpairs of an assembled Hamiltonian, multiplicity clustering and
//! grid-convergence studies.

mod cluster;
mod lanczos;
mod study;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::discretization::{DiscretizationError, GridOperator};
use crate::krylov::conjugate_gradient;
use crate::par;

pub use cluster::{
    cluster_multiplicities, cluster_multiplicities_relative, MultiplicityCluster, DEFAULT_GAP_RTOL,
};
pub use lanczos::{start_vector, LinearOperator, Which};
pub use study::{convergence_study, ConvergenceEntry, ConvergenceStudy, GridFamily, Reference};

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("k = {k} is outside 1..={max} for an operator of dimension {dim}")]
    TooManyEigenpairs { k: usize, dim: usize, max: usize },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("convergence study needs at least 3 grid sizes, got {0}")]
    TooFewSizes(usize),
    #[error("reference has {found} values, {needed} needed")]
    ReferenceTooShort { needed: usize, found: usize },
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
}

impl LinearOperator for GridOperator {
    fn dim(&self) -> usize {
        GridOperator::dim(self)
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_into(x, y);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SolverMode {
    Standard,
    /// Iterate on `(H − σ)⁻¹` with CG inner solves. `σ` must lie strictly
    /// below the spectrum so that `H − σ` is positive definite.
    ShiftInvert {
        shift: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub k: usize,
    pub tol: f64,
    /// Budget of outer operator applications.
    pub max_iter: usize,
    pub seed: u64,
    /// Krylov basis size before a thick restart; `None` picks
    /// `max(3k, k + 40, 80)`.
    pub basis_size: Option<usize>,
    pub mode: SolverMode,
    /// Absolute gap for clustering; `None` uses the relative default.
    pub gap_tol: Option<f64>,
}

impl SolverOptions {
    pub fn new(k: usize, tol: f64, max_iter: usize, seed: u64) -> Self {
        Self {
            k,
            tol,
            max_iter,
            seed,
            basis_size: None,
            mode: SolverMode::Standard,
            gap_tol: None,
        }
    }
}

/// Computed eigenpairs, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    /// `‖Hu − λu‖` recomputed with one explicit matvec per pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: Vec<bool>,
    pub h: f64,
    pub grid_signature: String,
    pub tol: f64,
    pub clusters: Vec<MultiplicityCluster>,
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectrumResult {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub fn recluster(&mut self, gap_tol: f64) {
        self.clusters = cluster_multiplicities(&self.eigenvalues, gap_tol);
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,eigenvalue,residual,converged")?;
        for i in 0..self.eigenvalues.len() {
            writeln!(
                w,
                "{},{:.15e},{:.6e},{}",
                i, self.eigenvalues[i], self.residuals[i], self.converged[i]
            )?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> io::Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(io::Error::other)
    }
}

struct ShiftInverted<'a, A: LinearOperator + ?Sized> {
    op: &'a A,
    shift: f64,
    inner_tol: f64,
}

impl<A: LinearOperator + ?Sized> LinearOperator for ShiftInverted<'_, A> {
    fn dim(&self) -> usize {
        self.op.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let shifted = |u: &[f64], out: &mut [f64]| {
            self.op.apply(u, out);
            par::axpy(-self.shift, u, out);
        };
        let (sol, stats) = conjugate_gradient(shifted, x, self.inner_tol, 20 * self.op.dim() + 100);
        if !stats.converged {
            log::warn!(
                "shift-invert inner solve stalled at relative residual {:.2e}",
                stats.relative_residual
            );
        }
        y.copy_from_slice(&sol);
    }
}

/// Ascending eigenpairs of a generic operator with explicit residuals.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    pub vectors: Vec<Vec<f64>>,
    pub steps: usize,
}

/// Orthonormalizes `vectors` and returns the Ritz vectors of their span,
/// ascending by Ritz value.
fn rayleigh_ritz<A: LinearOperator + ?Sized>(op: &A, mut vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for i in 0..vectors.len() {
        let (done, rest) = vectors.split_at_mut(i);
        let v = &mut rest[0];
        for _ in 0..2 {
            for d in done.iter() {
                let c = par::dot(d, v);
                par::axpy(-c, d, v);
            }
        }
        let nv = par::norm(v);
        par::scale(1.0 / nv, v);
    }
    let m = vectors.len();
    let mut images = vec![vec![0.0; op.dim()]; m];
    for (v, av) in vectors.iter().zip(images.iter_mut()) {
        op.apply(v, av);
    }
    let g = nalgebra::DMatrix::from_fn(m, m, |i, j| {
        0.5 * (par::dot(&vectors[i], &images[j]) + par::dot(&vectors[j], &images[i]))
    });
    let eig = g.symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order
        .iter()
        .map(|&c| {
            let mut out = vec![0.0; op.dim()];
            par::fill_indexed(&mut out, |t| {
                (0..m)
                    .map(|r| eig.eigenvectors[(r, c)] * vectors[r][t])
                    .sum()
            });
            out
        })
        .collect()
}

/// Rayleigh quotient and residual `‖Au − λu‖` of a unit vector.
fn rayleigh_residual<A: LinearOperator + ?Sized>(
    op: &A,
    u: &[f64],
    work: &mut [f64],
) -> (f64, f64) {
    op.apply(u, work);
    let lambda = par::dot(u, work);
    par::axpy(-lambda, u, work);
    (lambda, par::norm(work))
}

fn check_request(dim: usize, k: usize, tol: f64) -> Result<(), EigenError> {
    let max = dim / 4;
    if k == 0 || k > max {
        return Err(EigenError::TooManyEigenpairs { k, dim, max });
    }
    if !(tol > 0.0) {
        return Err(EigenError::InvalidTolerance(tol));
    }
    Ok(())
}

/// Lowest `k` eigenpairs of any symmetric operator. Returns a result whose
/// `converged` flags mark the pairs meeting `‖Au−λu‖ ≤ tol·max(1,|λ|)`;
/// running out of budget is reported through those flags, not as an error.
pub fn lowest_eigenpairs_of<A: LinearOperator + ?Sized>(
    op: &A,
    opts: &SolverOptions,
) -> Result<EigenPairs, EigenError> {
    let n = op.dim();
    check_request(n, opts.k, opts.tol)?;
    let k = opts.k;
    let basis_size = opts.basis_size.unwrap_or((3 * k).max(k + 40).max(80));
    let inverted = match opts.mode {
        SolverMode::Standard => None,
        SolverMode::ShiftInvert { shift } => Some(ShiftInverted {
            op,
            shift,
            inner_tol: 1e-12,
        }),
    };
    let mut budget = opts.max_iter.max(1);
    let run = |want: usize, locked: &[Vec<f64>], seed: u64, budget: usize| {
        let mut work = vec![0.0; n];
        // residuals are measured off the locked span, where the search lives
        let accept = |_: &[f64], vectors: &[Vec<f64>]| {
            vectors.iter().all(|u| {
                op.apply(u, &mut work);
                let l = par::dot(u, &work);
                par::axpy(-l, u, &mut work);
                for v in locked {
                    let c = par::dot(v, &work);
                    par::axpy(-c, v, &mut work);
                }
                par::norm(&work) <= opts.tol * l.abs().max(1.0)
            })
        };
        let mut params = lanczos::LanczosParams {
            k: want,
            which: Which::Smallest,
            basis_size,
            max_steps: budget,
            seed,
            estimate_tol: opts.tol,
        };
        match &inverted {
            None => lanczos::thick_restart_lanczos(op, &params, locked, accept),
            Some(inv) => {
                params.which = Which::Largest;
                params.estimate_tol = opts.tol * 1e-2;
                lanczos::thick_restart_lanczos(inv, &params, locked, accept)
            }
        }
    };

    let mut work = vec![0.0; n];
    let mut measure = |mut u: Vec<f64>| {
        let nu = par::norm(&u);
        par::scale(1.0 / nu, &mut u);
        let (l, r) = rayleigh_residual(op, &u, &mut work);
        (l, r, u)
    };
    let first = run(k, &[], opts.seed, budget);
    let mut steps = first.steps;
    budget = budget.saturating_sub(first.steps);
    let mut pairs: Vec<(f64, f64, Vec<f64>)> =
        first.vectors.into_iter().map(&mut measure).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let is_converged = |l: f64, r: f64| r <= opts.tol * l.abs().max(1.0);

    // A Krylov sequence sees one copy of an exactly degenerate eigenvalue.
    // Search the complement of the accepted vectors for missed copies until
    // nothing below the current top turns up.
    let mut round = 1;
    while pairs.len() == k
        && pairs.len() < n
        && budget > 0
        && pairs.iter().all(|p| is_converged(p.0, p.1))
    {
        let locked: Vec<Vec<f64>> = pairs.iter().map(|p| p.2.clone()).collect();
        let extra = run(1, &locked, opts.seed.wrapping_add(round), budget);
        steps += extra.steps;
        budget = budget.saturating_sub(extra.steps);
        round += 1;
        let Some(u) = extra.vectors.into_iter().next() else {
            break;
        };
        let (l, _, u) = measure(u);
        let top = pairs[k - 1].0;
        if l >= top - opts.tol * top.abs().max(1.0) {
            break;
        }
        let mut span = locked;
        span.push(u);
        pairs = rayleigh_ritz(op, span)
            .into_iter()
            .take(k)
            .map(&mut measure)
            .collect();
    }

    let mut values = Vec::with_capacity(pairs.len());
    let mut residuals = Vec::with_capacity(pairs.len());
    let mut converged = Vec::with_capacity(pairs.len());
    let mut vectors = Vec::with_capacity(pairs.len());
    for (l, r, u) in pairs {
        converged.push(is_converged(l, r));
        values.push(l);
        residuals.push(r);
        vectors.push(u);
    }
    Ok(EigenPairs {
        values,
        residuals,
        converged,
        vectors,
        steps,
    })
}

/// Lowest `k` eigenpairs of an assembled Hamiltonian.
pub fn lowest_eigenpairs(
    op: &GridOperator,
    k: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SpectrumResult, EigenError> {
    solve(op, &SolverOptions::new(k, tol, max_iter, seed))
}

pub fn solve(op: &GridOperator, opts: &SolverOptions) -> Result<SpectrumResult, EigenError> {
    let EigenPairs {
        values: eigenvalues,
        residuals,
        converged,
        vectors: eigenvectors,
        steps: iterations,
    } = lowest_eigenpairs_of(op, opts)?;
    let clusters = match opts.gap_tol {
        Some(g) => cluster_multiplicities(&eigenvalues, g),
        None => cluster_multiplicities_relative(&eigenvalues, DEFAULT_GAP_RTOL),
    };
    let result = SpectrumResult {
        eigenvalues,
        residuals,
        iterations,
        converged,
        h: op.h,
        grid_signature: op.grid.signature(),
        tol: opts.tol,
        clusters,
        eigenvectors,
    };
    if !result.all_converged() {
        log::warn!(
            "{} of {} eigenpairs unconverged after {} iterations",
            result.converged.iter().filter(|c| !**c).count(),
            result.converged.len(),
            iterations
        );
    }
    Ok(result)
}
