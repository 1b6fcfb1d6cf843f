//! Thick-restart Lanczos with full (two-pass classical Gram-Schmidt)
//! reorthogonalization.
//!
//! The projected matrix `T = Vᵀ A V` is kept dense: after a restart it is an
//! arrowhead (kept Ritz values on the diagonal, coupling to the residual
//! direction in the last row), followed by the usual tridiagonal tail.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::par;

/// A real symmetric operator `x ↦ Ax`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Smallest,
    Largest,
}

/// Steps between Ritz convergence checks inside a restart cycle.
const CHECK_INTERVAL: usize = 10;

pub(crate) struct RitzPairs {
    pub vectors: Vec<Vec<f64>>,
    pub steps: usize,
}

/// Seeded start vector: ChaCha8 stream from `seed`, entries uniform in
/// `[-1, 1)`, normalized.
pub fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = par::norm(&v);
    par::scale(1.0 / nv, &mut v);
    v
}

fn project(basis: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    par::map_indexed(basis.len(), |i| par::dot_serial(&basis[i], w))
}

fn subtract(w: &mut [f64], basis: &[Vec<f64>], c: &[f64]) {
    par::update_indexed(w, |t, x| {
        let mut acc = x;
        for (b, ci) in basis.iter().zip(c) {
            acc -= ci * b[t];
        }
        acc
    });
}

fn combine(basis: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    par::fill_indexed(&mut out, |t| {
        basis.iter().zip(c).map(|(b, ci)| ci * b[t]).sum()
    });
    out
}

/// Orthogonalizes `w` against `basis` twice; returns the accumulated coefficients.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut c = project(basis, w);
    subtract(w, basis, &c);
    let c2 = project(basis, w);
    subtract(w, basis, &c2);
    for (a, b) in c.iter_mut().zip(c2) {
        *a += b;
    }
    c
}

/// Eigenpairs of the leading `len × len` block, ascending.
fn projected_eigen(t: &[Vec<f64>], len: usize) -> (Vec<f64>, DMatrix<f64>) {
    let m = DMatrix::from_fn(len, len, |i, j| t[i][j]);
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(len, len, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

fn fresh_direction(
    basis: &[Vec<f64>],
    locked: &[Vec<f64>],
    n: usize,
    seed: u64,
) -> Option<Vec<f64>> {
    for attempt in 0..8 {
        let mut v = start_vector(
            n,
            seed.wrapping_add(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(attempt),
        );
        if !locked.is_empty() {
            orthogonalize(&mut v, locked);
        }
        orthogonalize(&mut v, basis);
        let nv = par::norm(&v);
        if nv > 1e-8 {
            par::scale(1.0 / nv, &mut v);
            return Some(v);
        }
    }
    None
}

pub(crate) struct LanczosParams {
    pub k: usize,
    pub which: Which,
    pub basis_size: usize,
    pub max_steps: usize,
    pub seed: u64,
    /// Initial acceptance threshold on the Ritz residual estimates, relative
    /// to `max(1, |θ|)`.
    pub estimate_tol: f64,
}

/// Runs the iteration on the orthogonal complement of `locked` until `accept` approves the wanted Ritz pairs, the
/// Krylov space exhausts the whole space, or `max_steps` operator
/// applications have been spent. `accept` sees wanted values and vectors in
/// wanted-first order; when it rejects, the estimate threshold is tightened
/// tenfold and the iteration continues.
pub(crate) fn thick_restart_lanczos<A, C>(
    op: &A,
    params: &LanczosParams,
    locked: &[Vec<f64>],
    mut accept: C,
) -> RitzPairs
where
    A: LinearOperator + ?Sized,
    C: FnMut(&[f64], &[Vec<f64>]) -> bool,
{
    let n = op.dim();
    let room = n - locked.len();
    let k = params.k.min(room);
    let m = params.basis_size.max(k + 2).min(room);
    let mut start = start_vector(n, params.seed);
    if !locked.is_empty() {
        orthogonalize(&mut start, locked);
        let ns = par::norm(&start);
        par::scale(1.0 / ns, &mut start);
    }
    let mut basis = vec![start];
    let mut t = vec![vec![0.0; m]; m];
    let mut w = vec![0.0; n];
    let mut steps = 0;
    let mut since_check = 0;
    let mut estimate_tol = params.estimate_tol;
    let mut op_scale: f64 = 0.0;

    loop {
        let j = basis.len() - 1;
        op.apply(&basis[j], &mut w);
        steps += 1;
        since_check += 1;
        if !locked.is_empty() {
            orthogonalize(&mut w, locked);
        }
        let c = orthogonalize(&mut w, &basis);
        // the basis projection feeds locked components back in, amplified by
        // the operator scale; strip them again
        if !locked.is_empty() {
            orthogonalize(&mut w, locked);
        }
        for (i, ci) in c.iter().enumerate() {
            t[i][j] = *ci;
            t[j][i] = *ci;
            op_scale = op_scale.max(ci.abs());
        }
        let beta = par::norm(&w);
        let len = basis.len();
        let full_space = len == room;
        let at_restart = len == m;
        let out_of_steps = steps >= params.max_steps;

        if at_restart || full_space || out_of_steps || since_check >= CHECK_INTERVAL {
            since_check = 0;
            let (theta, s) = projected_eigen(&t, len);
            let order: Vec<usize> = match params.which {
                Which::Smallest => (0..len).collect(),
                Which::Largest => (0..len).rev().collect(),
            };
            let wanted = &order[..k.min(len)];
            let settled = wanted
                .iter()
                .all(|&i| beta * s[(len - 1, i)].abs() <= estimate_tol * theta[i].abs().max(1.0));
            if (settled && wanted.len() == k) || full_space || out_of_steps {
                let values: Vec<f64> = wanted.iter().map(|&i| theta[i]).collect();
                let vectors: Vec<Vec<f64>> = wanted
                    .iter()
                    .map(|&i| combine(&basis, s.column(i).as_slice()))
                    .collect();
                if accept(&values, &vectors) || full_space || out_of_steps {
                    return RitzPairs { vectors, steps };
                }
                estimate_tol /= 10.0;
            }
            if at_restart {
                let keep = (k + (m - k) / 2).min(m - 2).max(k);
                let kept = &order[..keep];
                let mut new_basis: Vec<Vec<f64>> = kept
                    .iter()
                    .map(|&i| combine(&basis, s.column(i).as_slice()))
                    .collect();
                let mut new_t = vec![vec![0.0; m]; m];
                for (r, &i) in kept.iter().enumerate() {
                    new_t[r][r] = theta[i];
                }
                let next = if beta > 1e-12 * op_scale.max(1e-300) {
                    for (r, &i) in kept.iter().enumerate() {
                        let coupling = beta * s[(len - 1, i)];
                        new_t[keep][r] = coupling;
                        new_t[r][keep] = coupling;
                    }
                    w.iter().map(|x| x / beta).collect()
                } else {
                    match fresh_direction(
                        &new_basis,
                        locked,
                        n,
                        params.seed.wrapping_add(steps as u64),
                    ) {
                        Some(v) => v,
                        None => {
                            return RitzPairs {
                                vectors: new_basis.into_iter().take(k).collect(),
                                steps,
                            }
                        }
                    }
                };
                new_basis.push(next);
                basis = new_basis;
                t = new_t;
                continue;
            }
        }

        if beta > 1e-12 * op_scale.max(1e-300) {
            t[j + 1][j] = beta;
            t[j][j + 1] = beta;
            basis.push(w.iter().map(|x| x / beta).collect());
        } else {
            // invariant subspace: continue from a fresh orthogonal direction
            match fresh_direction(&basis, locked, n, params.seed.wrapping_add(steps as u64)) {
                Some(v) => basis.push(v),
                None => {
                    let (_, s) = projected_eigen(&t, len);
                    let idx: Vec<usize> = match params.which {
                        Which::Smallest => (0..k.min(len)).collect(),
                        Which::Largest => (0..len).rev().take(k).collect(),
                    };
                    return RitzPairs {
                        vectors: idx
                            .iter()
                            .map(|&i| combine(&basis, s.column(i).as_slice()))
                            .collect(),
                        steps,
                    };
                }
            }
        }
    }
}
