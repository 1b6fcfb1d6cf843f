//! Conjugate-gradient solvers for the inner linear systems.

use num_complex::Complex64;

use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final `‖b − Ax‖ / ‖b‖`.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for a symmetric positive definite operator.
pub fn conjugate_gradient<F>(
    apply: F,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolveStats)
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = par::norm(b);
    if bnorm == 0.0 {
        return (
            x,
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut q = vec![0.0; n];
    let mut rr = par::dot(&r, &r);
    let mut it = 0;
    while it < max_iter && rr.sqrt() > tol * bnorm {
        apply(&p, &mut q);
        let pq = par::dot(&p, &q);
        if !(pq > 0.0) {
            break;
        }
        let alpha = rr / pq;
        par::axpy(alpha, &p, &mut x);
        par::axpy(-alpha, &q, &mut r);
        let rr_new = par::dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        par::fill_indexed(&mut q, |i| r[i] + beta * p[i]);
        std::mem::swap(&mut p, &mut q);
        it += 1;
    }
    // recompute the true residual
    apply(&x, &mut q);
    let res: Vec<f64> = b.iter().zip(&q).map(|(bi, qi)| bi - qi).collect();
    let rel = par::norm(&res) / bnorm;
    (
        x,
        SolveStats {
            iterations: it,
            relative_residual: rel,
            converged: rel <= tol * 1.0001,
        },
    )
}

/// Complex vector stored as separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitComplex {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl SplitComplex {
    pub fn zeros(n: usize) -> Self {
        Self {
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    pub fn from_real(re: &[f64]) -> Self {
        Self {
            re: re.to_vec(),
            im: vec![0.0; re.len()],
        }
    }

    pub fn norm(&self) -> f64 {
        (par::dot(&self.re, &self.re) + par::dot(&self.im, &self.im)).sqrt()
    }

    /// Unconjugated bilinear product `xᵀy`.
    fn bilinear(&self, other: &Self) -> Complex64 {
        Complex64::new(
            par::dot(&self.re, &other.re) - par::dot(&self.im, &other.im),
            par::dot(&self.re, &other.im) + par::dot(&self.im, &other.re),
        )
    }

    /// `self += a · x`
    fn add_scaled(&mut self, a: Complex64, x: &Self) {
        let (re, im) = (&mut self.re, &mut self.im);
        for i in 0..re.len() {
            re[i] += a.re * x.re[i] - a.im * x.im[i];
            im[i] += a.re * x.im[i] + a.im * x.re[i];
        }
    }
}

/// Applies `(H − z)` with `H` real symmetric: both parts go through `apply`.
fn apply_shifted<F>(apply: &F, z: Complex64, x: &SplitComplex, out: &mut SplitComplex)
where
    F: Fn(&[f64], &mut [f64]),
{
    apply(&x.re, &mut out.re);
    apply(&x.im, &mut out.im);
    for i in 0..x.re.len() {
        let (a, b) = (x.re[i], x.im[i]);
        out.re[i] -= z.re * a - z.im * b;
        out.im[i] -= z.re * b + z.im * a;
    }
}

/// Conjugate orthogonal CG for the complex-symmetric system `(H − z) x = b`
/// (real `H`, `Im z ≠ 0`). Works on the real/imaginary split throughout.
pub fn cocg_shifted<F>(
    apply: F,
    z: Complex64,
    b: &SplitComplex,
    tol: f64,
    max_iter: usize,
) -> (SplitComplex, SolveStats)
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.re.len();
    let mut x = SplitComplex::zeros(n);
    let bnorm = b.norm();
    if bnorm == 0.0 {
        return (
            x,
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut q = SplitComplex::zeros(n);
    let mut rho = r.bilinear(&r);
    let mut it = 0;
    while it < max_iter && r.norm() > tol * bnorm {
        apply_shifted(&apply, z, &p, &mut q);
        let pq = p.bilinear(&q);
        if pq.norm() == 0.0 || rho.norm() == 0.0 {
            break;
        }
        let alpha = rho / pq;
        x.add_scaled(alpha, &p);
        r.add_scaled(-alpha, &q);
        let rho_new = r.bilinear(&r);
        let beta = rho_new / rho;
        rho = rho_new;
        // p = r + beta p
        for i in 0..n {
            let (pr, pi) = (p.re[i], p.im[i]);
            p.re[i] = r.re[i] + beta.re * pr - beta.im * pi;
            p.im[i] = r.im[i] + beta.re * pi + beta.im * pr;
        }
        it += 1;
    }
    apply_shifted(&apply, z, &x, &mut q);
    let mut res = b.clone();
    res.add_scaled(Complex64::new(-1.0, 0.0), &q);
    let rel = res.norm() / bnorm;
    (
        x,
        SolveStats {
            iterations: it,
            relative_residual: rel,
            converged: rel <= tol * 1.0001,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(x: &[f64], y: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let mut v = 2.5 * x[i];
            if i > 0 {
                v -= x[i - 1];
            }
            if i + 1 < n {
                v -= x[i + 1];
            }
            y[i] = v;
        }
    }

    #[test]
    fn cg_solves_spd_system() {
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let (x, stats) = conjugate_gradient(tridiag, &b, 1e-12, 500);
        assert!(stats.converged);
        let mut ax = vec![0.0; 50];
        tridiag(&x, &mut ax);
        for (a, bb) in ax.iter().zip(&b) {
            assert!((a - bb).abs() < 1e-10);
        }
    }

    #[test]
    fn cocg_solves_shifted_system() {
        let b =
            SplitComplex::from_real(&(0..40).map(|i| (0.3 * i as f64).cos()).collect::<Vec<_>>());
        let z = Complex64::new(0.0, 1.0);
        let (x, stats) = cocg_shifted(tridiag, z, &b, 1e-10, 1000);
        assert!(stats.converged, "{stats:?}");
        let mut ax = SplitComplex::zeros(40);
        apply_shifted(&tridiag, z, &x, &mut ax);
        for i in 0..40 {
            assert!((ax.re[i] - b.re[i]).abs() < 1e-8);
            assert!((ax.im[i] - b.im[i]).abs() < 1e-8);
        }
    }
}
