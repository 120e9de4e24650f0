//! Small row-major dense matrices and a Cholesky factorization.
//!
//! Only what the coarse solves and the dense eigensolver need.

use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, CsrMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nrows * ncols, "dense data length");
        Self { nrows, ncols, data }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            assert_eq!(r.len(), ncols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { nrows, ncols, data }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_sparse(a: &CsrMatrix) -> Self {
        Self::from_row_major(a.nrows(), a.ncols(), a.to_dense())
    }

    /// Builds an `nrows × columns.len()` matrix from column vectors.
    pub fn from_columns(nrows: usize, columns: &[Vec<f64>]) -> Self {
        let ncols = columns.len();
        let mut m = Self::zeros(nrows, ncols);
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), nrows, "column length");
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension");
        (0..self.nrows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.ncols, other.nrows, "matmul dimension");
        let mut out = Self::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn add_scaled(&self, s: f64, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + s * b)
            .collect();
        Self::from_row_major(self.nrows, self.ncols, data)
    }

    /// Replaces the matrix by `(B + Bᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for j in 0..i {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`, stored row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    /// Factors a symmetric positive definite matrix. Only the lower triangle
    /// of `a` is read.
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                op: "cholesky",
                expected: n,
                got: a.ncols(),
            });
        }
        let scale = a.max_abs();
        let mut l = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                if i == j {
                    // A pivot at roundoff level relative to the entries means
                    // the matrix is numerically semidefinite.
                    if !(s > f64::EPSILON * scale * n as f64) {
                        return Err(Error::NotPositiveDefinite { pivot: i });
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor_l(&self) -> &DenseMatrix {
        &self.l
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        assert_eq!(b.len(), n);
        for i in 0..n {
            let row = self.l.row(i);
            b[i] = (b[i] - dot(&row[..i], &b[..i])) / row[i];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    pub fn solve_upper_in_place(&self, y: &mut [f64]) {
        let n = self.dim();
        assert_eq!(y.len(), n);
        for i in (0..n).rev() {
            y[i] /= self.l[(i, i)];
            let yi = y[i];
            // Column i of Lᵀ above the diagonal is row i of L left of it.
            for (yk, &lik) in y[..i].iter_mut().zip(&self.l.row(i)[..i]) {
                *yk -= lik * yi;
            }
        }
    }

    /// Solves `L X = B` in place for all columns of `B` at once.
    pub fn solve_lower_matrix_in_place(&self, b: &mut DenseMatrix) {
        const BLOCK: usize = 32;
        let n = self.dim();
        assert_eq!(b.nrows(), n);
        let w = b.ncols();
        let data = b.as_mut_slice();
        for start in (0..n).step_by(BLOCK) {
            let end = (start + BLOCK).min(n);
            let (done, rest) = data.split_at_mut(start * w);
            let block = &mut rest[..(end - start) * w];
            // Eliminate the finished rows, each loaded once per block.
            for j in 0..start {
                let xj = &done[j * w..(j + 1) * w];
                for (r, xi) in block.chunks_exact_mut(w).enumerate() {
                    let lij = self.l[(start + r, j)];
                    if lij != 0.0 {
                        axpy(-lij, xj, xi);
                    }
                }
            }
            for r in 0..end - start {
                let i = start + r;
                let (before, current) = block.split_at_mut(r * w);
                let xi = &mut current[..w];
                for (rr, xj) in before.chunks_exact(w).enumerate() {
                    let lij = self.l[(i, start + rr)];
                    if lij != 0.0 {
                        axpy(-lij, xj, xi);
                    }
                }
                let d = self.l[(i, i)];
                xi.iter_mut().for_each(|x| *x /= d);
            }
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_tridiagonal() {
        let a = DenseMatrix::from_rows(&[&[2.0, -1.0, 0.0], &[-1.0, 2.0, -1.0], &[0.0, -1.0, 2.0]]);
        let x = Cholesky::factor(&a).unwrap().solve(&[1.0, 0.0, 0.0]);
        for (got, want) in x.iter().zip([0.75, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn blocked_solve_matches_vector_solves() {
        let n = 70;
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 4.0 + i as f64 * 0.01;
            if i > 0 {
                a[(i, i - 1)] = -1.0;
                a[(i - 1, i)] = -1.0;
            }
            if i > 5 {
                a[(i, i - 6)] = 0.5;
                a[(i - 6, i)] = 0.5;
            }
        }
        let chol = Cholesky::factor(&a).unwrap();
        let mut b =
            DenseMatrix::from_row_major(n, 3, (0..3 * n).map(|k| (k as f64).sin()).collect());
        let columns: Vec<Vec<f64>> = (0..3).map(|j| b.column(j)).collect();
        chol.solve_lower_matrix_in_place(&mut b);
        for (j, col) in columns.into_iter().enumerate() {
            let mut x = col;
            chol.solve_lower_in_place(&mut x);
            for i in 0..n {
                assert!((b[(i, j)] - x[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(
            Cholesky::factor(&a),
            Err(Error::NotPositiveDefinite { pivot: 1 })
        ));
        assert!(matches!(
            Cholesky::factor(&DenseMatrix::zeros(2, 2)),
            Err(Error::NotPositiveDefinite { pivot: 0 })
        ));
    }

    #[test]
    fn matmul_and_transpose() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let ata = a.transpose().matmul(&a);
        assert_eq!(ata, DenseMatrix::from_rows(&[&[35.0, 44.0], &[44.0, 56.0]]));
    }
}
