//! Cyclic Jacobi eigensolver for small dense symmetric matrices.
//!
//! Each sweep visits the off-diagonal pairs `(p, q)` in row-major order and
//! applies the plane rotation that annihilates `a[p][q]`. The visiting order is
//! fixed, so repeated calls on the same input give bit-identical results on a
//! given platform.

use super::matrix::{Matrix, SymMatrix};

const MAX_SWEEPS: usize = 100;

/// Ascending eigenvalues with matching orthonormal eigenvectors (as columns).
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Column `k` of the eigenvector matrix.
    pub fn vector(&self, k: usize) -> Vec<f64> {
        let n = self.eigenvectors.dim();
        (0..n).map(|i| self.eigenvectors[(i, k)]).collect()
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n).map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)]).sum();
            }
        }
        out
    }
}

/// Eigen-decomposition of a symmetric matrix.
///
/// The residual `‖A V − V Λ‖` is at the level of a few ulps of `‖A‖`.
pub fn sym_eigen(a: &SymMatrix) -> Spectrum {
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();

    if scale > 0.0 {
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
                .map(|(p, q)| m[(p, q)] * m[(p, q)])
                .sum::<f64>()
                .sqrt();
            if off <= f64::EPSILON * 1e-2 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    rotate(&mut m, &mut v, p, q);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let eigenvalues = order.iter().map(|&k| m[(k, k)]).collect();
    let mut eigenvectors = Matrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[(i, col)] = v[(i, k)];
        }
    }
    Spectrum { eigenvalues, eigenvectors }
}

fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let n = m.dim();
    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta.is_infinite() { 0.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    m[(p, p)] -= t * apq;
    m[(q, q)] += t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        if k != p && k != q {
            let akp = m[(k, p)];
            let akq = m[(k, q)];
            let new_kp = c * akp - s * akq;
            let new_kq = s * akp + c * akq;
            m[(k, p)] = new_kp;
            m[(p, k)] = new_kp;
            m[(k, q)] = new_kq;
            m[(q, k)] = new_kq;
        }
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Induced 2-norm, `sqrt(λ_max(AᵀA))`.
pub fn spectral_norm(a: &Matrix) -> f64 {
    let gram = a.transpose().matmul(a).sym_part();
    sym_eigen(&gram).max().max(0.0).sqrt()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min(a: &SymMatrix) -> f64 {
    sym_eigen(a).min()
}
