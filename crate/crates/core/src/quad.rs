//! QUAD-type conditions and coupling-gain thresholds.
//!
//! The sampled checkers are falsifiers: a pass only means that no violation
//! was found among the drawn pairs. Every [`QuadReport`] carries that caveat.
//!
//! The threshold functions implement the closed-form bounds for diffusively
//! coupled networks (`t1`, `t2`, `c1`) and for two nodes with an additional
//! sign coupling (`t3`, `t4`).

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{SignPolicy, SignState, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::matgraph::{spectral_norm, sym_eigen, Matrix, SymMatrix};
use crate::seed;

/// Sampled margins at or above this value count as satisfied.
pub const PASS_TOL: f64 = -1e-9;

/// Number of time points drawn from for non-autonomous fields.
pub const TIME_GRID_POINTS: usize = 32;

/// Default sample count for the checkers.
pub const DEFAULT_SAMPLES: usize = 100_000;

const SPECTRAL_ZERO: f64 = 1e-12;

// ---------------------------------------------------------------------------
// sampled checks
// ---------------------------------------------------------------------------

/// Axis-aligned box `[lo_1, hi_1] × … × [lo_n, hi_n]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::param("domain bounds must be nonempty and of equal length"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::param("domain needs finite bounds with lo <= hi"));
        }
        Ok(BoxDomain { lo, hi })
    }

    /// `[-r, r]^n`.
    pub fn cube(n: usize, r: f64) -> Self {
        BoxDomain { lo: vec![-r; n], hi: vec![r; n] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(&a, &b)| a + (b - a) * rng.random::<f64>()).collect()
    }

    fn clamp(&self, x: &mut [f64]) {
        for ((v, a), b) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*a, *b);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadCondition {
    Quad,
    RelaxedQuad,
    Coupling,
}

impl fmt::Display for QuadCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuadCondition::Quad => "quad",
            QuadCondition::RelaxedQuad => "relaxed_quad",
            QuadCondition::Coupling => "coupling",
        })
    }
}

/// The pair that attained the smallest margin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadReport {
    pub condition: QuadCondition,
    pub samples: usize,
    pub min_margin: f64,
    pub witness: Witness,
    pub passed: bool,
    /// Always true: sampling can refute the condition but never prove it.
    pub falsification_only: bool,
}

impl QuadReport {
    fn from_min(condition: QuadCondition, samples: usize, min_margin: f64, witness: Witness) -> Self {
        QuadReport {
            condition,
            samples,
            min_margin,
            witness,
            passed: min_margin >= PASS_TOL,
            falsification_only: true,
        }
    }

    /// Human-readable verdict including the sampling caveat.
    pub fn verdict(&self) -> String {
        if self.passed {
            format!("no violation found in domain at sample size {}", self.samples)
        } else {
            format!("violated (margin {:e})", self.min_margin)
        }
    }

    pub fn to_kv(&self) -> String {
        let v = |x: &[f64]| x.iter().map(|a| format!("{a:?}")).collect::<Vec<_>>().join(" ");
        format!(
            "condition = {}\nsamples = {}\nmin_margin = {:?}\npassed = {}\nfalsification_only = {}\n\
             witness_xi1 = {}\nwitness_xi2 = {}\nwitness_t = {:?}\n",
            self.condition,
            self.samples,
            self.min_margin,
            self.passed,
            self.falsification_only,
            v(&self.witness.xi1),
            v(&self.witness.xi2),
            self.witness.t
        )
    }

    pub const CSV_HEADER: &'static str = "condition,samples,min_margin,passed,falsification_only";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:?},{},{}",
            self.condition, self.samples, self.min_margin, self.passed, self.falsification_only
        )
    }
}

/// Shared sampling parameters of the checkers.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampling {
    pub domain: BoxDomain,
    pub t_range: (f64, f64),
    pub n_samples: usize,
    pub seed: u64,
}

impl Sampling {
    pub fn new(domain: BoxDomain, n_samples: usize, seed: u64) -> Self {
        Sampling { domain, t_range: (0.0, 2.0 * std::f64::consts::PI), n_samples, seed }
    }

    pub fn with_t_range(mut self, lo: f64, hi: f64) -> Self {
        self.t_range = (lo, hi);
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.domain.dim() != n {
            return Err(Error::param(format!("domain has dimension {}, field has {n}", self.domain.dim())));
        }
        if self.n_samples == 0 {
            return Err(Error::param("need at least one sample"));
        }
        let (a, b) = self.t_range;
        if !(a >= 0.0 && a <= b && b.is_finite()) {
            return Err(Error::param(format!("bad time range [{a}, {b}]")));
        }
        Ok(())
    }
}

fn check_pd(p: &SymMatrix, what: &str) -> Result<()> {
    let lmin = sym_eigen(p).min();
    if lmin <= 0.0 {
        return Err(Error::param(format!("{what} must be positive definite (λ_min = {lmin:e})")));
    }
    Ok(())
}

/// Draws the `s`-th sample pair.
///
/// Even samples are two independent uniform points. Odd samples straddle a
/// switching surface `w_kᵀx = 0` (for fields that have one): `ξ1` is uniform,
/// `ξ2` is its mirror image across the surface, displaced by a uniform offset
/// whose scale is drawn log-uniformly in `[1e-3, 1]` of the box size, then
/// clamped back into the box.
fn sample_pair(spec: &VectorFieldSpec, cfg: &Sampling, s: usize) -> (Vec<f64>, Vec<f64>, f64) {
    let mut rng = seed::rng(seed::mix(&[cfg.seed, s as u64]));
    let xi1 = cfg.domain.sample(&mut rng);
    let relays = spec.affine().map(|f| f.relays.as_slice()).unwrap_or(&[]);
    let xi2 = if s % 2 == 1 && !relays.is_empty() {
        let w = &relays[rng.random_range(0..relays.len())].switch;
        let ww: f64 = w.iter().map(|v| v * v).sum();
        let mut x = xi1.clone();
        if ww > 0.0 {
            let proj = crate::dynamics::dot(w, &xi1) / ww;
            for (v, wi) in x.iter_mut().zip(w) {
                *v -= 2.0 * proj * wi;
            }
        }
        let scale = 10f64.powf(-3.0 * rng.random::<f64>());
        for ((v, a), b) in x.iter_mut().zip(&cfg.domain.lo).zip(&cfg.domain.hi) {
            *v += scale * (b - a) * (rng.random::<f64>() - 0.5);
        }
        cfg.domain.clamp(&mut x);
        x
    } else {
        cfg.domain.sample(&mut rng)
    };
    let t = if spec.is_autonomous() {
        cfg.t_range.0
    } else {
        let k = rng.random_range(0..TIME_GRID_POINTS);
        let (a, b) = cfg.t_range;
        a + (b - a) * k as f64 / (TIME_GRID_POINTS - 1) as f64
    };
    (xi1, xi2, t)
}

/// Slack of the (relaxed) QUAD inequality at one pair:
/// `eᵀQe + mᵀ|e| − eᵀP[f(ξ1) − f(ξ2)]` with `e = ξ1 − ξ2`.
pub fn quad_margin(
    spec: &VectorFieldSpec,
    p: &Matrix,
    q: &Matrix,
    m: Option<&[f64]>,
    xi1: &[f64],
    xi2: &[f64],
    t: f64,
) -> f64 {
    let policy = SignPolicy::default();
    let signs = SignState::pure(&policy);
    let n = xi1.len();
    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];
    spec.eval_into(xi1, t, &signs, 0, &mut f1);
    spec.eval_into(xi2, t, &signs, 0, &mut f2);
    let e: Vec<f64> = xi1.iter().zip(xi2).map(|(a, b)| a - b).collect();
    let df: Vec<f64> = f1.iter().zip(&f2).map(|(a, b)| a - b).collect();
    let pdf = p.mul_vec(&df);
    let lhs: f64 = e.iter().zip(&pdf).map(|(a, b)| a * b).sum();
    let slack = m.map_or(0.0, |m| m.iter().zip(&e).map(|(mh, eh)| mh * eh.abs()).sum());
    q.quad_form(&e) + slack - lhs
}

fn run_sampled<F>(cfg: &Sampling, margin_of: F) -> (f64, usize)
where
    F: Fn(usize) -> f64 + Sync,
{
    (0..cfg.n_samples)
        .into_par_iter()
        .map(|s| (margin_of(s), s))
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Less => a,
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Equal => (a.0, a.1.min(b.1)),
            },
        )
}

fn check_quad_impl(
    spec: &VectorFieldSpec,
    p: &SymMatrix,
    q: &Matrix,
    m: Option<&[f64]>,
    cfg: &Sampling,
) -> Result<QuadReport> {
    let n = spec.dim();
    if p.dim() != n || q.dim() != n {
        return Err(Error::param(format!("P and Q must be {n}x{n}")));
    }
    cfg.validate(n)?;
    check_pd(p, "P")?;
    let (min_margin, idx) = run_sampled(cfg, |s| {
        let (a, b, t) = sample_pair(spec, cfg, s);
        quad_margin(spec, p, q, m, &a, &b, t)
    });
    let (xi1, xi2, t) = sample_pair(spec, cfg, idx);
    let condition = if m.is_some() { QuadCondition::RelaxedQuad } else { QuadCondition::Quad };
    Ok(QuadReport::from_min(condition, cfg.n_samples, min_margin, Witness { xi1, xi2, t }))
}

/// Samples `(ξ1−ξ2)ᵀQ(ξ1−ξ2) − (ξ1−ξ2)ᵀP[f(ξ1;t) − f(ξ2;t)] ≥ 0`.
pub fn check_quad(spec: &VectorFieldSpec, p: &SymMatrix, q: &Matrix, cfg: &Sampling) -> Result<QuadReport> {
    check_quad_impl(spec, p, q, None, cfg)
}

/// As [`check_quad`] with the additional slack `mᵀ|ξ1 − ξ2|`.
pub fn check_relaxed_quad(
    spec: &VectorFieldSpec,
    p: &SymMatrix,
    q: &Matrix,
    m: &[f64],
    cfg: &Sampling,
) -> Result<QuadReport> {
    if m.len() != spec.dim() {
        return Err(Error::param(format!("m has length {}, expected {}", m.len(), spec.dim())));
    }
    if m.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::param("m must be componentwise nonnegative"));
    }
    check_quad_impl(spec, p, q, Some(m), cfg)
}

/// Linear diffusive coupling `g(ξ1, ξ2) = cΓ(ξ2 − ξ1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusiveCoupling {
    pub gamma: Matrix,
    pub c: f64,
}

impl DiffusiveCoupling {
    pub fn eval(&self, xi1: &[f64], xi2: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = xi2.iter().zip(xi1).map(|(a, b)| a - b).collect();
        self.gamma.mul_vec(&d).into_iter().map(|v| self.c * v).collect()
    }
}

/// Checks the three coupling requirements: `g(ξ,ξ) = 0` and antisymmetry
/// exactly, and `(ξ2−ξ1)ᵀP g(ξ1,ξ2) ≥ c (ξ1−ξ2)ᵀG(ξ1−ξ2)` by sampling.
///
/// An exact-identity failure enters the report as a negative margin equal to
/// the size of the defect. `G` defaults to `sym(PΓ)`.
pub fn check_coupling_assumption(
    g: &DiffusiveCoupling,
    p: &SymMatrix,
    big_g: Option<&SymMatrix>,
    domain: &BoxDomain,
    n_samples: usize,
    seed_value: u64,
) -> Result<QuadReport> {
    let n = g.gamma.dim();
    if p.dim() != n || domain.dim() != n || big_g.is_some_and(|m| m.dim() != n) {
        return Err(Error::param(format!("coupling check needs {n}-dimensional P, G and domain")));
    }
    if n_samples == 0 {
        return Err(Error::param("need at least one sample"));
    }
    let default_g = p.matmul(&g.gamma).sym_part();
    let gm = big_g.unwrap_or(&default_g);
    let cfg = Sampling::new(domain.clone(), n_samples, seed_value);
    let draw = |s: usize| {
        let mut rng = seed::rng(seed::mix(&[seed_value, s as u64]));
        (domain.sample(&mut rng), domain.sample(&mut rng))
    };
    let margin = |s: usize| {
        let (a, b) = draw(s);
        let same = g.eval(&a, &a);
        let defect_i = same.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let gab = g.eval(&a, &b);
        let gba = g.eval(&b, &a);
        let defect_ii = gab.iter().zip(&gba).fold(0.0f64, |m, (x, y)| m.max((x + y).abs()));
        if defect_i > 0.0 || defect_ii > 0.0 {
            return -(defect_i.max(defect_ii));
        }
        let d21: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
        let pg = p.mul_vec(&gab);
        let lhs: f64 = d21.iter().zip(&pg).map(|(x, y)| x * y).sum();
        lhs - g.c * gm.quad_form(&d21)
    };
    let (min_margin, idx) = run_sampled(&cfg, margin);
    let (xi1, xi2) = draw(idx);
    Ok(QuadReport::from_min(QuadCondition::Coupling, n_samples, min_margin, Witness { xi1, xi2, t: 0.0 }))
}

// ---------------------------------------------------------------------------
// thresholds
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Theorem {
    /// Network, QUAD field, `G > 0`.
    T1,
    /// Network, QUAD field, `Q′` and `G` simultaneously diagonalizable.
    T2,
    /// Diagonal special case of `T2`.
    C1,
    /// Two nodes with sign coupling, `sym(PΓ) > 0`.
    T3,
    /// Two nodes with sign coupling, `Q′` and `PΓ` simultaneously diagonalizable.
    T4,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    /// `c > c*`
    Strict,
    /// `c ≥ c*`
    NonStrict,
}

impl Comparison {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Strict => ">",
            Comparison::NonStrict => ">=",
        }
    }

    pub fn admits(self, gain: f64, threshold: f64) -> bool {
        match self {
            Comparison::Strict => gain > threshold,
            Comparison::NonStrict => gain >= threshold,
        }
    }
}

/// The spectral quantities a threshold was computed from.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct InputsDigest {
    pub q_norm: Option<f64>,
    pub q_prime_eigs: Option<Vec<f64>>,
    pub lambda2: Option<f64>,
    pub g_min: Option<f64>,
    pub g_eigs: Option<Vec<f64>>,
    pub m: Option<Vec<f64>>,
    pub gamma_d: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub theorem: Theorem,
    pub c_star: f64,
    pub c_comparison: Comparison,
    pub cd_star: Option<f64>,
    pub inputs: InputsDigest,
}

impl ThresholdReport {
    /// `c_d` always uses `≥`.
    pub fn cd_comparison(&self) -> Option<Comparison> {
        self.cd_star.map(|_| Comparison::NonStrict)
    }

    pub fn admits(&self, c: f64, cd: f64) -> bool {
        self.c_comparison.admits(c, self.c_star) && self.cd_star.is_none_or(|t| cd >= t)
    }

    pub fn summary(&self) -> String {
        match self.cd_star {
            Some(cd) => format!(
                "{}: c* = {:.4} (c {} c*), c_d* = {:.4} (c_d >= c_d*)",
                self.theorem,
                self.c_star,
                self.c_comparison.symbol(),
                cd
            ),
            None => format!("{}: c* = {:.4} (c {} c*)", self.theorem, self.c_star, self.c_comparison.symbol()),
        }
    }

    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "theorem = {}\nc_star = {:?}\nc_comparison = {}\n",
            self.theorem,
            self.c_star,
            self.c_comparison.symbol()
        );
        if let Some(cd) = self.cd_star {
            s += &format!("cd_star = {cd:?}\ncd_comparison = >=\n");
        }
        let list = |v: &[f64]| v.iter().map(|a| format!("{a:?}")).collect::<Vec<_>>().join(" ");
        let d = &self.inputs;
        if let Some(v) = d.q_norm {
            s += &format!("q_norm = {v:?}\n");
        }
        if let Some(v) = &d.q_prime_eigs {
            s += &format!("q_prime_eigs = {}\n", list(v));
        }
        if let Some(v) = d.lambda2 {
            s += &format!("lambda2 = {v:?}\n");
        }
        if let Some(v) = d.g_min {
            s += &format!("g_min = {v:?}\n");
        }
        if let Some(v) = &d.g_eigs {
            s += &format!("g_eigs = {}\n", list(v));
        }
        if let Some(v) = &d.m {
            s += &format!("m = {}\n", list(v));
        }
        if let Some(v) = &d.gamma_d {
            s += &format!("gamma_d = {}\n", list(v));
        }
        s
    }

    pub const CSV_HEADER: &'static str = "theorem,c_star,c_comparison,cd_star,q_norm,lambda2,g_min";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        format!(
            "{},{:?},{},{},{},{},{}",
            self.theorem,
            self.c_star,
            self.c_comparison.symbol(),
            opt(self.cd_star),
            opt(self.inputs.q_norm),
            opt(self.inputs.lambda2),
            opt(self.inputs.g_min)
        )
    }
}

/// `Q = Q⁻ + Q′` with `sym(Q⁻)` negative definite and `Q′` symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct QSplit {
    qminus: Matrix,
    qprime: SymMatrix,
}

impl QSplit {
    /// Splits a given `Q` as `Q⁻ = Q − Q′`.
    pub fn new(q: &Matrix, qprime: SymMatrix) -> Result<Self> {
        if q.dim() != qprime.dim() {
            return Err(Error::param("Q and Q' dimensions differ"));
        }
        Self::from_parts(q.sub(&qprime), qprime)
    }

    pub fn from_parts(qminus: Matrix, qprime: SymMatrix) -> Result<Self> {
        if qminus.dim() != qprime.dim() {
            return Err(Error::param("Q- and Q' dimensions differ"));
        }
        let lmax = sym_eigen(&qminus.sym_part()).max();
        if lmax >= 0.0 {
            return Err(Error::hypothesis(format!("Q- must be negative definite (λ_max = {lmax:e})")));
        }
        Ok(QSplit { qminus, qprime })
    }

    pub fn qminus(&self) -> &Matrix {
        &self.qminus
    }

    pub fn qprime(&self) -> &SymMatrix {
        &self.qprime
    }

    pub fn q(&self) -> Matrix {
        self.qminus.add(&self.qprime)
    }
}

/// Orthogonal `T` that diagonalizes two commuting symmetric matrices, with
/// the paired diagonal entries (`q_diag[h]`, `g_diag[h]` share column `h`).
#[derive(Clone, Debug)]
pub struct CommonBasis {
    pub t: Matrix,
    pub q_diag: Vec<f64>,
    pub g_diag: Vec<f64>,
}

/// Common eigenbasis of `Q′` and `G`, built from the eigenbasis of `G` and
/// refined inside each cluster of repeated `G` eigenvalues by diagonalizing
/// `Q′` restricted to that cluster.
pub fn simultaneous_diag(qprime: &SymMatrix, g: &SymMatrix) -> Result<CommonBasis> {
    let n = qprime.dim();
    if g.dim() != n {
        return Err(Error::param("Q' and G dimensions differ"));
    }
    let qn = spectral_norm(qprime);
    let gn = spectral_norm(g);
    let comm = qprime.matmul(g).sub(&g.matmul(qprime));
    let comm_norm = spectral_norm(&comm);
    if comm_norm > 1e-9 * (qn * gn + 1.0) {
        return Err(Error::NotCommuting { commutator_norm: comm_norm });
    }

    let gs = sym_eigen(g);
    let cluster_tol = 1e-8 * gn.max(1.0);
    let mut t = gs.eigenvectors.clone();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && gs.eigenvalues[end] - gs.eigenvalues[end - 1] <= cluster_tol {
            end += 1;
        }
        let size = end - start;
        if size > 1 {
            // restrict Q' to span of columns start..end
            let cols: Vec<Vec<f64>> = (start..end).map(|k| gs.vector(k)).collect();
            let mut block = Matrix::zeros(size);
            for a in 0..size {
                let qa = qprime.mul_vec(&cols[a]);
                for b in 0..size {
                    block[(b, a)] = cols[b].iter().zip(&qa).map(|(x, y)| x * y).sum();
                }
            }
            let inner = sym_eigen(&block.sym_part());
            for a in 0..size {
                for i in 0..n {
                    t[(i, start + a)] = (0..size).map(|b| cols[b][i] * inner.eigenvectors[(b, a)]).sum();
                }
            }
        }
        start = end;
    }

    let tt = t.transpose();
    let dq = tt.matmul(qprime).matmul(&t);
    let dg = tt.matmul(g).matmul(&t);
    let scale = (qn + gn).max(1.0);
    if !dq.is_diagonal(1e-8 * scale) || !dg.is_diagonal(1e-8 * scale) {
        return Err(Error::NotCommuting { commutator_norm: comm_norm });
    }
    Ok(CommonBasis { t, q_diag: dq.diag(), g_diag: dg.diag() })
}

fn check_lambda2(lambda2: f64) -> Result<()> {
    if !(lambda2 > 1e-9) {
        return Err(Error::hypothesis(format!("graph is disconnected (λ2 = {lambda2:e})")));
    }
    Ok(())
}

/// `c* = ‖Q‖ / (λ2(L) λ_min(G))`, strict.
pub fn threshold_t1(q: &Matrix, lambda2: f64, g: &SymMatrix) -> Result<ThresholdReport> {
    check_lambda2(lambda2)?;
    let g_min = sym_eigen(g).min();
    if g_min <= 0.0 {
        return Err(Error::hypothesis(format!("G must be positive definite (λ_min = {g_min:e})")));
    }
    let q_norm = spectral_norm(q);
    Ok(ThresholdReport {
        theorem: Theorem::T1,
        c_star: q_norm / (lambda2 * g_min),
        c_comparison: Comparison::Strict,
        cd_star: None,
        inputs: InputsDigest { q_norm: Some(q_norm), lambda2: Some(lambda2), g_min: Some(g_min), ..Default::default() },
    })
}

/// `max_h λ_h(Q′)/λ_h(G)` over common eigenvectors with `λ_h(Q′) > 0`, or 0.
fn paired_ratio(basis: &CommonBasis, qscale: f64, gscale: f64) -> Result<f64> {
    let mut best: f64 = 0.0;
    for (h, (&q, &g)) in basis.q_diag.iter().zip(&basis.g_diag).enumerate() {
        if q > SPECTRAL_ZERO * qscale.max(1.0) {
            if g <= SPECTRAL_ZERO * gscale.max(1.0) {
                return Err(Error::hypothesis(format!(
                    "common eigenvector {h}: λ(Q') = {q:e} > 0 but λ(G) = {g:e} <= 0"
                )));
            }
            best = best.max(q / g);
        }
    }
    Ok(best)
}

/// `c* = max_h λ_h(Q′)/λ_h(G) / λ2(L)`, non-strict, eigenvalues paired
/// through the common eigenbasis.
pub fn threshold_t2(split: &QSplit, g: &SymMatrix, lambda2: f64) -> Result<ThresholdReport> {
    check_lambda2(lambda2)?;
    let basis = simultaneous_diag(split.qprime(), g)?;
    let ratio = paired_ratio(&basis, spectral_norm(split.qprime()), spectral_norm(g))?;
    Ok(ThresholdReport {
        theorem: Theorem::T2,
        c_star: ratio / lambda2,
        c_comparison: Comparison::NonStrict,
        cd_star: None,
        inputs: InputsDigest {
            q_prime_eigs: Some(basis.q_diag),
            g_eigs: Some(basis.g_diag),
            lambda2: Some(lambda2),
            ..Default::default()
        },
    })
}

/// Diagonal case: `c* = max_{h: q_h>0} q_h/γ_h / λ2(L)`, non-strict.
pub fn threshold_c1(q: &[f64], gamma: &[f64], lambda2: f64) -> Result<ThresholdReport> {
    if q.len() != gamma.len() {
        return Err(Error::param("q and gamma lengths differ"));
    }
    check_lambda2(lambda2)?;
    let mut best: f64 = 0.0;
    for (h, (&qh, &gh)) in q.iter().zip(gamma).enumerate() {
        if gh < 0.0 {
            return Err(Error::hypothesis(format!("γ_{h} = {gh} is negative")));
        }
        if qh > 0.0 {
            if gh <= 0.0 {
                return Err(Error::hypothesis(format!("q_{h} = {qh} > 0 requires γ_{h} > 0")));
            }
            best = best.max(qh / gh);
        }
    }
    Ok(ThresholdReport {
        theorem: Theorem::C1,
        c_star: best / lambda2,
        c_comparison: Comparison::NonStrict,
        cd_star: None,
        inputs: InputsDigest {
            q_prime_eigs: Some(q.to_vec()),
            g_eigs: Some(gamma.to_vec()),
            lambda2: Some(lambda2),
            ..Default::default()
        },
    })
}

/// `c_d* = ½ max_{h: m_h>0} m_h / γ_{d,h}` with `PΓ_d = diag(γ_d)`.
fn sign_threshold(m: &[f64], p: &SymMatrix, gamma_d: &Matrix) -> Result<(f64, Vec<f64>)> {
    let n = p.dim();
    if m.len() != n || gamma_d.dim() != n {
        return Err(Error::param(format!("m and Γ_d must have dimension {n}")));
    }
    if m.iter().all(|&v| v == 0.0) {
        return Err(Error::hypothesis("m must be nonzero"));
    }
    let pgd = p.matmul(gamma_d);
    if !pgd.is_diagonal(1e-12 * pgd.max_abs().max(1.0)) {
        return Err(Error::hypothesis("PΓ_d must be diagonal"));
    }
    let gd = pgd.diag();
    let mut best: f64 = 0.0;
    for (h, (&mh, &g)) in m.iter().zip(&gd).enumerate() {
        if g < 0.0 {
            return Err(Error::hypothesis(format!("γ_d,{h} = {g} is negative")));
        }
        if mh > 0.0 {
            if g <= 0.0 {
                return Err(Error::hypothesis(format!("m_{h} = {mh} > 0 requires γ_d,{h} > 0")));
            }
            best = best.max(mh / g);
        }
    }
    Ok((0.5 * best, gd))
}

/// Two-node sign coupling with `sym(PΓ) > 0`:
/// `c* = ‖Q‖ / (2 λ_min(sym(PΓ)))` (strict), `c_d*` non-strict.
pub fn threshold_t3(
    q: &Matrix,
    m: &[f64],
    p: &SymMatrix,
    gamma: &Matrix,
    gamma_d: &Matrix,
) -> Result<ThresholdReport> {
    let n = p.dim();
    if q.dim() != n || gamma.dim() != n {
        return Err(Error::param(format!("Q and Γ must be {n}x{n}")));
    }
    check_pd(p, "P").map_err(|e| Error::hypothesis(e.to_string()))?;
    let g_min = sym_eigen(&p.matmul(gamma).sym_part()).min();
    if g_min <= 0.0 {
        return Err(Error::hypothesis(format!("sym(PΓ) must be positive definite (λ_min = {g_min:e})")));
    }
    let (cd_star, gd) = sign_threshold(m, p, gamma_d)?;
    let q_norm = spectral_norm(q);
    Ok(ThresholdReport {
        theorem: Theorem::T3,
        c_star: q_norm / (2.0 * g_min),
        c_comparison: Comparison::Strict,
        cd_star: Some(cd_star),
        inputs: InputsDigest {
            q_norm: Some(q_norm),
            g_min: Some(g_min),
            m: Some(m.to_vec()),
            gamma_d: Some(gd),
            ..Default::default()
        },
    })
}

/// Two-node sign coupling with `Q′` and `G = PΓ` simultaneously diagonalizable:
/// `c* = ½ max_h λ_h(Q′)/λ_h(G)` (strict), `c_d*` non-strict.
pub fn threshold_t4(
    split: &QSplit,
    m: &[f64],
    p: &SymMatrix,
    gamma: &Matrix,
    gamma_d: &Matrix,
) -> Result<ThresholdReport> {
    let n = p.dim();
    if split.qprime().dim() != n || gamma.dim() != n {
        return Err(Error::param(format!("Q' and Γ must be {n}x{n}")));
    }
    check_pd(p, "P").map_err(|e| Error::hypothesis(e.to_string()))?;
    let g = SymMatrix::new(p.matmul(gamma)).map_err(|_| Error::hypothesis("PΓ must be symmetric"))?;
    let basis = simultaneous_diag(split.qprime(), &g)?;
    let ratio = paired_ratio(&basis, spectral_norm(split.qprime()), spectral_norm(&g))?;
    let (cd_star, gd) = sign_threshold(m, p, gamma_d)?;
    Ok(ThresholdReport {
        theorem: Theorem::T4,
        c_star: 0.5 * ratio,
        c_comparison: Comparison::Strict,
        cd_star: Some(cd_star),
        inputs: InputsDigest {
            q_prime_eigs: Some(basis.q_diag),
            g_eigs: Some(basis.g_diag),
            m: Some(m.to_vec()),
            gamma_d: Some(gd),
            ..Default::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: &[f64]) -> SymMatrix {
        SymMatrix::from_diag(d)
    }

    #[test]
    fn t1_relay_numbers() {
        let r = threshold_t1(&Matrix::scaled_identity(2, 3.06), 14.80, &SymMatrix::identity(2)).unwrap();
        assert!((r.c_star - 3.06 / 14.80).abs() < 1e-14);
        assert_eq!(r.c_comparison, Comparison::Strict);
        assert!(r.cd_star.is_none());
        let r0 = threshold_t1(&Matrix::zeros(2), 14.80, &SymMatrix::identity(2)).unwrap();
        assert_eq!(r0.c_star, 0.0);
    }

    #[test]
    fn t1_hypotheses() {
        let q = Matrix::identity(2);
        assert!(matches!(threshold_t1(&q, 0.0, &SymMatrix::identity(2)), Err(Error::Hypothesis(_))));
        assert!(matches!(threshold_t1(&q, 1.0, &diag(&[0.0, 1.0])), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn t2_oscillator_numbers() {
        let q = Matrix::from_rows(&[[-1.0, 2.0], [0.0, 1.0]]).unwrap();
        let split = QSplit::new(&q, diag(&[0.0, 4.0])).unwrap();
        assert_eq!(split.qminus().rows(), vec![vec![-1.0, 2.0], vec![0.0, -3.0]]);
        let r = threshold_t2(&split, &diag(&[0.0, 1.0]), 14.80).unwrap();
        assert!((r.c_star - 4.0 / 14.80).abs() < 1e-14);
        assert_eq!(r.c_comparison, Comparison::NonStrict);
    }

    #[test]
    fn t2_nonpositive_qprime() {
        let split = QSplit::from_parts(Matrix::scaled_identity(2, -1.0), diag(&[-1.0, 0.0])).unwrap();
        let r = threshold_t2(&split, &diag(&[0.0, 1.0]), 3.0).unwrap();
        assert_eq!(r.c_star, 0.0);
    }

    #[test]
    fn t2_rejects_positive_qprime_on_null_g_direction() {
        let split = QSplit::from_parts(Matrix::scaled_identity(2, -1.0), diag(&[4.0, 0.0])).unwrap();
        assert!(matches!(threshold_t2(&split, &diag(&[0.0, 1.0]), 3.0), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn t2_pairs_by_common_eigenvector_not_sorted_order() {
        // Q' = diag(5, 1), G = diag(1, 10): paired ratios 5/1 and 1/10.
        // Sorted pairing would give max(1/1, 5/10) = 1 instead of 5.
        let split = QSplit::from_parts(Matrix::scaled_identity(2, -1.0), diag(&[5.0, 1.0])).unwrap();
        let r = threshold_t2(&split, &diag(&[1.0, 10.0]), 1.0).unwrap();
        assert!((r.c_star - 5.0).abs() < 1e-12);
    }

    #[test]
    fn split_requires_negative_definite_remainder() {
        let q = Matrix::identity(2);
        assert!(QSplit::new(&q, diag(&[0.5, 0.5])).is_err());
        let s = QSplit::new(&q, diag(&[2.0, 3.0])).unwrap();
        assert!(s.q().sub(&q).max_abs() <= 1e-12);
    }

    #[test]
    fn c1_cases() {
        let r = threshold_c1(&[0.0, 4.0], &[0.0, 1.0], 14.80).unwrap();
        assert!((r.c_star - 0.27).abs() < 0.005);
        assert_eq!(threshold_c1(&[-1.0, 0.0], &[0.0, 0.0], 2.0).unwrap().c_star, 0.0);
        let r = threshold_c1(&[1.0, 2.0], &[2.0, 1.0], 2.0).unwrap();
        assert!((r.c_star - 1.0).abs() < 1e-15);
        assert!(matches!(threshold_c1(&[1.0], &[0.0], 2.0), Err(Error::Hypothesis(_))));
        assert!(matches!(threshold_c1(&[1.0], &[-1.0], 2.0), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn t3_sprott_numbers() {
        let a = Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -1.0, -0.5]]).unwrap();
        let i3 = Matrix::identity(3);
        let r = threshold_t3(&a, &[2.0, 0.0, 0.0], &SymMatrix::identity(3), &i3, &i3).unwrap();
        assert!((r.c_star - 0.85).abs() < 0.005, "{}", r.c_star);
        assert_eq!(r.cd_star, Some(1.0));
        assert_eq!(r.c_comparison, Comparison::Strict);
        assert_eq!(r.cd_comparison(), Some(Comparison::NonStrict));
    }

    #[test]
    fn t3_sign_threshold_is_linear_in_m() {
        let i3 = Matrix::identity(3);
        let p = SymMatrix::identity(3);
        for eps in [1e-6, 0.3, 7.0] {
            let r = threshold_t3(&i3, &[eps, 0.0, 0.0], &p, &i3, &i3).unwrap();
            assert!((r.cd_star.unwrap() - eps / 2.0).abs() < 1e-15);
        }
        assert!(matches!(threshold_t3(&i3, &[0.0; 3], &p, &i3, &i3), Err(Error::Hypothesis(_))));
        // PΓ_d not diagonal
        let gd = Matrix::from_rows(&[[1.0, 0.1, 0.0], [0.1, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!(threshold_t3(&i3, &[1.0, 0.0, 0.0], &p, &i3, &gd).is_err());
        // γ_d = 0 where m > 0
        let gd = Matrix::from_diag(&[0.0, 1.0, 1.0]);
        assert!(threshold_t3(&i3, &[1.0, 0.0, 0.0], &p, &i3, &gd).is_err());
    }

    #[test]
    fn t4_cases() {
        let p = SymMatrix::identity(2);
        let qm = Matrix::scaled_identity(2, -1.0);
        let split = QSplit::from_parts(qm.clone(), diag(&[0.0, 4.0])).unwrap();
        let r = threshold_t4(&split, &[1.0, 0.0], &p, &Matrix::from_diag(&[0.0, 1.0]), &Matrix::identity(2)).unwrap();
        assert!((r.c_star - 2.0).abs() < 1e-14);
        assert_eq!(r.cd_star, Some(0.5));

        let split = QSplit::from_parts(qm.clone(), diag(&[-1.0, 0.0])).unwrap();
        let r = threshold_t4(&split, &[3.0, 0.0], &p, &Matrix::identity(2), &Matrix::identity(2)).unwrap();
        assert_eq!((r.c_star, r.cd_star), (0.0, Some(1.5)));

        let split = QSplit::from_parts(qm, diag(&[0.0, 0.0])).unwrap();
        let r = threshold_t4(&split, &[2.0, 2.0], &p, &Matrix::identity(2), &Matrix::from_diag(&[1.0, 2.0])).unwrap();
        assert_eq!((r.c_star, r.cd_star), (0.0, Some(1.0)));
    }

    #[test]
    fn simultaneous_diag_cases() {
        let b = simultaneous_diag(&diag(&[0.0, 4.0]), &diag(&[0.0, 1.0])).unwrap();
        assert!(b.t.sub(&Matrix::identity(2)).max_abs() < 1e-15);
        assert_eq!((b.q_diag, b.g_diag), (vec![0.0, 4.0], vec![0.0, 1.0]));

        let err = simultaneous_diag(&SymMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap(), &diag(&[1.0, 2.0]))
            .unwrap_err();
        match err {
            Error::NotCommuting { commutator_norm } => assert!((commutator_norm - 1.0).abs() < 1e-12),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn simultaneous_diag_with_identity_uses_qprime_eigenbasis() {
        let qp = SymMatrix::from_rows(&[[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]]).unwrap();
        let b = simultaneous_diag(&qp, &SymMatrix::identity(3)).unwrap();
        let mut q = b.q_diag.clone();
        q.sort_by(f64::total_cmp);
        for (got, want) in q.iter().zip([1.0, 3.0, 5.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(b.g_diag.iter().all(|g| (g - 1.0).abs() < 1e-12));
    }

    use crate::dynamics::{builtin, AffineRelay, FieldKind};

    fn relay_a() -> Matrix {
        Matrix::from_rows(&[[-1.0, -1.0], [2.0, 3.0]]).unwrap()
    }

    fn sprott_a() -> Matrix {
        Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -1.0, -0.5]]).unwrap()
    }

    #[test]
    fn relay_scaled_identity_q_is_refuted_across_the_switching_line() {
        // For e straddling w = (1, 1) the relay jump contributes 2 e_2 (sign
        // difference 2), which no multiple of the identity absorbs for small e.
        let relay = builtin(FieldKind::Relay);
        let cfg = Sampling::new(BoxDomain::cube(2, 5.0), DEFAULT_SAMPLES, 1);
        let r = check_quad(&relay, &SymMatrix::identity(2), &Matrix::scaled_identity(2, 3.06), &cfg).unwrap();
        assert!(!r.passed, "{r:?}");
        assert!(r.falsification_only);
        let w = &r.witness;
        let recomputed = quad_margin(&relay, &Matrix::identity(2), &Matrix::scaled_identity(2, 3.06), None, &w.xi1, &w.xi2, w.t);
        assert_eq!(recomputed, r.min_margin);
        let s1 = w.xi1[0] + w.xi1[1];
        let s2 = w.xi2[0] + w.xi2[1];
        assert!(s1 * s2 < 0.0, "witness does not straddle the switching line");
    }

    #[test]
    fn relay_smaller_q_fails_and_relaxed_form_passes() {
        let relay = builtin(FieldKind::Relay);
        let cfg = Sampling::new(BoxDomain::cube(2, 5.0), 20_000, 2);
        let p = SymMatrix::identity(2);
        let r = check_quad(&relay, &p, &Matrix::scaled_identity(2, 2.5), &cfg).unwrap();
        assert!(!r.passed);
        let q = relay_a().sym_part().into_matrix();
        let r = check_relaxed_quad(&relay, &p, &q, &[0.0, 4.0], &cfg).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn linear_field_with_symmetric_part_is_an_equality_case() {
        let a = relay_a();
        let field = VectorFieldSpec::affine_relay(AffineRelay::new(a.clone(), vec![0.0; 2], vec![]).unwrap());
        let cfg = Sampling::new(BoxDomain::cube(2, 5.0), 10_000, 3);
        let r = check_quad(&field, &SymMatrix::identity(2), &a.sym_part().into_matrix(), &cfg).unwrap();
        assert!(r.passed && r.min_margin.abs() <= 1e-9, "{}", r.min_margin);
        let r0 = check_relaxed_quad(&field, &SymMatrix::identity(2), &a, &[0.0; 2], &cfg).unwrap();
        assert_eq!(r0.min_margin.abs() <= 1e-9, r.min_margin.abs() <= 1e-9);
    }

    #[test]
    fn relaxed_with_zero_m_matches_plain_check() {
        let relay = builtin(FieldKind::Relay);
        let cfg = Sampling::new(BoxDomain::cube(2, 5.0), 5_000, 4);
        let p = SymMatrix::identity(2);
        let q = Matrix::scaled_identity(2, 3.06);
        let a = check_quad(&relay, &p, &q, &cfg).unwrap();
        let b = check_relaxed_quad(&relay, &p, &q, &[0.0, 0.0], &cfg).unwrap();
        assert_eq!((a.min_margin, a.passed, a.witness), (b.min_margin, b.passed, b.witness));
    }

    #[test]
    fn sprott_relaxed_quad_depends_on_which_component_gets_the_slack() {
        let sprott = builtin(FieldKind::Sprott);
        let cfg = Sampling::new(BoxDomain::cube(3, 5.0), 50_000, 5);
        let p = SymMatrix::identity(3);
        let q = sprott_a();
        // The jump enters the third row, so slack on the first coordinate
        // cannot absorb it when e_1 is small and e_3 is large.
        let r = check_relaxed_quad(&sprott, &p, &q, &[2.0, 0.0, 0.0], &cfg).unwrap();
        assert!(!r.passed, "{r:?}");
        let r = check_relaxed_quad(&sprott, &p, &q, &[0.0, 0.0, 2.0], &cfg).unwrap();
        assert!(r.passed, "{r:?}");
        let r = check_relaxed_quad(&sprott, &p, &q, &[0.0; 3], &cfg).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn oscillator_quad_needs_a_time_uniform_q() {
        // eᵀQe with Q = [[-1, 2], [0, 1]] covers the cross term 2 sin(t) e_1 e_2
        // only when sin(t) = 1 or e_1 e_2 >= 0.
        let osc = builtin(FieldKind::PwsOscillator);
        let cfg = Sampling::new(BoxDomain::cube(2, 5.0), 50_000, 6);
        let p = SymMatrix::identity(2);
        let q = Matrix::from_rows(&[[-1.0, 2.0], [0.0, 1.0]]).unwrap();
        let r = check_quad(&osc, &p, &q, &cfg).unwrap();
        assert!(!r.passed);
        let w = &r.witness;
        assert!((w.xi1[0] - w.xi2[0]) * (w.xi1[1] - w.xi2[1]) < 0.0);
        // 2|e_1 e_2| <= e_1²/2 + 2 e_2², and f_2 has slope at most 1
        let r = check_quad(&osc, &p, &Matrix::from_diag(&[-0.5, 3.0]), &cfg).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn checker_rejects_bad_inputs() {
        let relay = builtin(FieldKind::Relay);
        let cfg = Sampling::new(BoxDomain::cube(2, 1.0), 10, 0);
        let q = Matrix::identity(2);
        let not_pd = SymMatrix::from_diag(&[1.0, 0.0]);
        assert!(matches!(check_quad(&relay, &not_pd, &q, &cfg), Err(Error::Parameter(_))));
        assert!(check_relaxed_quad(&relay, &SymMatrix::identity(2), &q, &[-1.0, 0.0], &cfg).is_err());
        let cfg3 = Sampling::new(BoxDomain::cube(3, 1.0), 10, 0);
        assert!(check_quad(&relay, &SymMatrix::identity(2), &q, &cfg3).is_err());
    }

    #[test]
    fn sampled_checks_are_deterministic() {
        let relay = builtin(FieldKind::Relay);
        let cfg = Sampling::new(BoxDomain::cube(2, 5.0), 3_000, 9);
        let p = SymMatrix::identity(2);
        let q = Matrix::scaled_identity(2, 3.06);
        assert_eq!(check_quad(&relay, &p, &q, &cfg).unwrap(), check_quad(&relay, &p, &q, &cfg).unwrap());
    }

    #[test]
    fn coupling_assumption_cases() {
        let dom = BoxDomain::cube(2, 3.0);
        let p = SymMatrix::identity(2);
        let g = DiffusiveCoupling { gamma: Matrix::identity(2), c: 1.0 };
        let r = check_coupling_assumption(&g, &p, None, &dom, 2_000, 0).unwrap();
        assert!(r.passed && r.min_margin.abs() < 1e-12);
        let g = DiffusiveCoupling { gamma: Matrix::from_diag(&[0.0, 1.0]), c: 0.7 };
        let r = check_coupling_assumption(&g, &p, Some(&SymMatrix::from_diag(&[0.0, 1.0])), &dom, 2_000, 0).unwrap();
        assert!(r.passed);
        // a bound with G larger than sym(PΓ) must fail
        let r = check_coupling_assumption(&g, &p, Some(&SymMatrix::identity(2)), &dom, 2_000, 0).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn report_serialisations() {
        let i3 = Matrix::identity(3);
        let r = threshold_t3(&i3, &[2.0, 0.0, 0.0], &SymMatrix::identity(3), &i3, &i3).unwrap();
        let kv = r.to_kv();
        assert!(kv.contains("theorem = T3\n"));
        assert!(kv.contains("cd_star = 1.0\n"));
        assert_eq!(r.csv_row().split(',').count(), ThresholdReport::CSV_HEADER.split(',').count());
        assert!(r.summary().contains("c_d* = 1.0000"));
    }
}
