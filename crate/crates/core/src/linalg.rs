//! Small dense symmetric matrices and the cyclic Jacobi eigenvalue method.

use serde::{Deserialize, Serialize};

/// Dense symmetric matrix stored row-major. Only the symmetric part of the
/// input is kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatrixError {
    #[error("matrix is not square: row {row} has {len} entries, expected {dim}")]
    NotSquare { row: usize, len: usize, dim: usize },
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *d;
        }
        m
    }

    /// Builds `(M + Mᵀ)/2` from a square row list.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        let dim = rows.len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(MatrixError::NotSquare {
                    row,
                    len: r.len(),
                    dim,
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(MatrixError::NonFinite);
            }
        }
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                m.data[i * dim + j] = 0.5 * (v + rows[j][i]);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.dim.max(1))
            .take(self.dim)
            .map(|r| r.to_vec())
            .collect()
    }

    /// `⟨Mx, x⟩`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            let row = &self.data[i * self.dim..(i + 1) * self.dim];
            let ri: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            acc += x[i] * ri;
        }
        acc
    }

    /// Block diagonal `diag(self, other)`.
    pub fn block_diag(&self, other: &SymMatrix) -> SymMatrix {
        let dim = self.dim + other.dim;
        let mut m = SymMatrix::zeros(dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.data[i * dim + j] = self.get(i, j);
            }
        }
        for i in 0..other.dim {
            for j in 0..other.dim {
                m.data[(self.dim + i) * dim + self.dim + j] = other.get(i, j);
            }
        }
        m
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    s += self.get(i, j).powi(2);
                }
            }
        }
        s.sqrt()
    }

    /// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
    /// below `1e-12` times the matrix norm (or an absolute `1e-300`).
    pub fn jacobi_eigen(&self) -> SymEigen {
        let n = self.dim;
        let mut a = self.clone();
        let mut v = SymMatrix::identity(n);
        let scale = a.data.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        let mut sweeps = 0;
        while a.off_diagonal_norm() > 1e-12 * scale && sweeps < 100 {
            sweeps += 1;
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a.get(p, q);
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a.get(p, p);
                    let aqq = a.get(q, q);
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.data[k * n + p] = c * akp - s * akq;
                        a.data[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.data[p * n + k] = c * apk - s * aqk;
                        a.data[q * n + k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.data[k * n + p] = c * vkp - s * vkq;
                        v.data[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
        let values = order.iter().map(|&i| a.get(i, i)).collect();
        let vectors = order
            .iter()
            .map(|&i| (0..n).map(|k| v.get(k, i)).collect())
            .collect();
        SymEigen {
            values,
            vectors,
            sweeps,
        }
    }

    /// Ascending eigenvalues, rejecting any that are not strictly positive.
    pub fn positive_definite_eigenvalues(&self) -> Result<Vec<f64>, MatrixError> {
        let eig = self.jacobi_eigen();
        match eig.values.first() {
            Some(&min) if min <= 0.0 => Err(MatrixError::NotPositiveDefinite {
                min_eigenvalue: min,
            }),
            _ => Ok(eig.values),
        }
    }
}

/// Eigen-decomposition of a [`SymMatrix`]; `vectors[i]` pairs with `values[i]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_two_by_two() {
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = m.jacobi_eigen();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_reconstructs_random_matrix() {
        let rows = vec![
            vec![4.0, -1.0, 0.5, 0.2],
            vec![-1.0, 3.0, 0.1, 0.0],
            vec![0.5, 0.1, 2.0, -0.7],
            vec![0.2, 0.0, -0.7, 1.0],
        ];
        let m = SymMatrix::from_rows(&rows).unwrap();
        let e = m.jacobi_eigen();
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let r: f64 = (0..4)
                    .map(|k| e.values[k] * e.vectors[k][i] * e.vectors[k][j])
                    .sum();
                assert!((r - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetrizes_input() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        assert_eq!(m.get(1, 0), 1.0);
    }

    #[test]
    fn rejects_indefinite() {
        let m = SymMatrix::from_rows(&[vec![-1.0]]).unwrap();
        assert!(matches!(
            m.positive_definite_eigenvalues(),
            Err(MatrixError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn rejects_ragged() {
        assert!(SymMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0]]).is_err());
    }
}
