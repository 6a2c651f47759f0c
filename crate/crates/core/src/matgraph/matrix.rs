use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Absolute tolerance on `a[i][j] - a[j][i]` for a matrix to count as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense square matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        Self::from_diag(&vec![s; n])
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from rows; every row must have as many entries as there are rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::param("matrix must have at least one row"));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n {
                return Err(Error::param(format!(
                    "row {i} has {} entries, expected {n} (square matrix)",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("matrix entries must be finite"));
        }
        Ok(Matrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `(A + Aᵀ)/2`, exactly symmetric.
    pub fn sym_part(&self) -> SymMatrix {
        let mut s = Self::zeros(self.n);
        for i in 0..self.n {
            s[(i, i)] = self[(i, i)];
            for j in (i + 1)..self.n {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        SymMatrix(s)
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n, "dimension mismatch in matmul");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| x[i] * self.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest symmetry defect `(i, j, |a_ij - a_ji|)`.
    pub fn asymmetry(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let d = (self[(i, j)] - self[(j, i)]).abs();
                if d > worst.2 {
                    worst = (i, j, d);
                }
            }
        }
        worst
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self[(i, j)].abs() <= tol))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries((0..self.n).map(|i| self.row(i))).finish()
    }
}

/// A [`Matrix`] known to be symmetric within [`SYMMETRY_TOL`].
#[derive(Clone, PartialEq, Debug)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        let (row, col, diff) = m.asymmetry();
        if diff > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { row, col, diff });
        }
        Ok(SymMatrix(m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn from_diag(d: &[f64]) -> Self {
        SymMatrix(Matrix::from_diag(d))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Matrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl std::ops::Deref for SymMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}
