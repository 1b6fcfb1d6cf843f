use std::io::{self, Write};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Compressed sparse row matrix; column indices are sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists. Each row must be sorted by column.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dim = rows.len();
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            acc += self.values[k] * x[self.col_idx[k]];
        }
        acc
    }

    /// `y = A x` on the calling thread.
    pub fn mul_vec_into_seq(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(i, x);
        }
    }

    /// `y = A x`, row-parallel when the `parallel` feature is on. Each row
    /// is summed in column order, so the result does not depend on threading.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        #[cfg(feature = "parallel")]
        y.par_chunks_mut(1024).enumerate().for_each(|(c, chunk)| {
            let base = c * 1024;
            for (o, yi) in chunk.iter_mut().enumerate() {
                *yi = self.row_dot(base + o, x);
            }
        });
        #[cfg(not(feature = "parallel"))]
        self.mul_vec_into_seq(x, y);
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let mut cols = vec![0.0; self.dim];
        for (c, v) in self.col_idx.iter().zip(&self.values) {
            cols[*c] += v.abs();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    /// Coordinate-triplet text: a `dimension nnz` header, then one
    /// `row col value` line per stored entry (0-based indices, 17 significant
    /// digits).
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {}", self.dim, self.nnz())?;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                writeln!(w, "{i} {j} {v:.16e}")?;
            }
        }
        Ok(())
    }

    /// Structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag() -> CsrMatrix {
        CsrMatrix::from_rows(vec![
            vec![(0, 2.0), (1, -1.0)],
            vec![(0, -1.0), (1, 2.0), (2, -1.0)],
            vec![(1, -1.0), (2, 2.0)],
        ])
    }

    #[test]
    fn mul_first_column() {
        let a = tridiag();
        let mut y = vec![0.0; 3];
        a.mul_vec_into(&[1.0, 0.0, 0.0], &mut y);
        assert_eq!(y, vec![2.0, -1.0, 0.0]);
    }

    #[test]
    fn triplet_export() {
        let mut out = Vec::new();
        tridiag().write_triplets(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("3 7"));
        assert_eq!(lines.next(), Some("0 0 2.0000000000000000e0"));
        assert_eq!(text.lines().count(), 8);
    }

    #[test]
    fn norms_and_symmetry() {
        let a = tridiag();
        assert_eq!(a.one_norm(), 4.0);
        assert!(a.is_symmetric());
    }
}
