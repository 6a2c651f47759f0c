//! Independent reference computations shared by the integration tests.
//!
//! None of these call into the library's numerics.

#![allow(dead_code)]

/// Characteristic polynomial `det(λI − A)` by Faddeev–LeVerrier, coefficients
/// in ascending order (`c[n] = 1`).
pub fn char_poly(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = (0..n).map(|l| a[i][l] * m[l][j]).sum::<f64>();
            }
            next[i][i] += c[n - k + 1];
        }
        m = next;
        let am_trace: f64 = (0..n).map(|i| (0..n).map(|l| a[i][l] * m[l][i]).sum::<f64>()).sum();
        c[n - k] = -am_trace / k as f64;
    }
    c
}

pub fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * x + v)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, &v)| k as f64 * v).collect()
}

fn bisect(c: &[f64], mut a: f64, mut b: f64) -> f64 {
    let mut fa = poly_eval(c, a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = poly_eval(c, m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a <= f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Simple real roots of a polynomial in `[lo, hi]`: the interval is cut at
/// the roots of the derivative, and each monotone piece is bisected.
pub fn real_roots(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let deg = c.len() - 1;
    if deg == 0 {
        return vec![];
    }
    if deg == 1 {
        let r = -c[0] / c[1];
        return if (lo..=hi).contains(&r) { vec![r] } else { vec![] };
    }
    let mut cuts = vec![lo];
    cuts.extend(real_roots(&poly_deriv(c), lo, hi));
    cuts.push(hi);
    let mut roots = Vec::new();
    for w in cuts.windows(2) {
        let (fa, fb) = (poly_eval(c, w[0]), poly_eval(c, w[1]));
        if (fa < 0.0) != (fb < 0.0) {
            roots.push(bisect(c, w[0], w[1]));
        }
    }
    roots
}

/// Eigenvalues of a small symmetric matrix from its characteristic
/// polynomial, ascending. Returns `None` when the roots are not all simple
/// enough to separate.
pub fn eigenvalues_oracle(a: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = a.len();
    let bound = a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) + 1.0;
    let roots = real_roots(&char_poly(a), -bound, bound);
    (roots.len() == n).then_some(roots)
}

/// Closed-form Laplacian spectrum of the path on `n` nodes.
pub fn path_spectrum(n: usize) -> Vec<f64> {
    (0..n).map(|k| 4.0 * (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin().powi(2)).collect()
}

/// Closed-form Laplacian spectrum of the ring where each node links to `k`
/// neighbours on each side, ascending.
pub fn ring_spectrum(n: usize, k: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|m| {
            let th = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
            (1..=k).map(|j| 2.0 - 2.0 * (j as f64 * th).cos()).sum()
        })
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|l| a[i][l] * b[l][j]).sum()).collect()).collect()
}

/// `exp(A t)` by Taylor series with scaling and squaring.
pub fn expm(a: &[Vec<f64>], t: f64) -> Vec<Vec<f64>> {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|v| (v * t).abs()).sum::<f64>()).fold(0.0, f64::max);
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let scale = t / 2f64.powi(s);
    let x: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
    let mut sum: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut term = sum.clone();
    for k in 1..30 {
        term = mat_mul(&term, &x);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..s {
        sum = mat_mul(&sum, &sum);
    }
    sum
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// `e_s` by a separate code path: pairwise sums into the mean, then norms.
pub fn sync_error_oracle(x: &[f64], n: usize) -> f64 {
    let nodes = x.len() / n;
    let mut total = 0.0;
    for i in 0..nodes {
        let mut sq = 0.0;
        for h in 0..n {
            let mean = (0..nodes).map(|j| x[j * n + h]).sum::<f64>() / nodes as f64;
            sq += (x[i * n + h] - mean).powi(2);
        }
        total += sq.sqrt();
    }
    total / nodes as f64
}

/// Spectral norm of a small matrix as the square root of the largest
/// eigenvalue of `AᵀA`, by power iteration.
pub fn spectral_norm_oracle(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let at_a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (0..n).map(|l| a[l][i] * a[l][j]).sum()).collect()).collect();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let w = mat_vec(&at_a, &v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
    }
    lambda.sqrt()
}
