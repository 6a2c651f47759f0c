//! Fixed-step integration of discontinuous right-hand sides.
//!
//! Sign terms are evaluated at every stage with the configured
//! [`SignPolicy`]. When the policy has a hysteresis band, the latched sign of
//! each switching function is refreshed only at step boundaries, so all stages
//! of one step see the same latch.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{SignPolicy, SignState, VectorFieldSpec};
use crate::error::{Error, Result};

/// Euclidean state norm beyond which a run is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e9;

/// A right-hand side `ẋ = F(t, x)` whose sign terms are resolved through a
/// [`SignState`].
pub trait Dynamics {
    fn dim(&self) -> usize;

    /// Number of scalar switching functions that take part in hysteresis latching.
    fn switch_count(&self) -> usize {
        0
    }

    fn switching_values(&self, _x: &[f64], _out: &mut [f64]) {}

    fn rhs(&self, t: f64, x: &[f64], signs: &SignState, dx: &mut [f64]);
}

impl Dynamics for VectorFieldSpec {
    fn dim(&self) -> usize {
        VectorFieldSpec::dim(self)
    }

    fn switch_count(&self) -> usize {
        VectorFieldSpec::switch_count(self)
    }

    fn switching_values(&self, x: &[f64], out: &mut [f64]) {
        VectorFieldSpec::switching_values(self, x, out)
    }

    fn rhs(&self, t: f64, x: &[f64], signs: &SignState, dx: &mut [f64]) {
        self.eval_into(x, t, signs, 0, dx)
    }
}

/// Closure-backed dynamics without latched switching functions.
pub struct FnDynamics<F> {
    dim: usize,
    f: F,
}

impl<F> FnDynamics<F>
where
    F: Fn(f64, &[f64], &SignState, &mut [f64]),
{
    pub fn new(dim: usize, f: F) -> Self {
        FnDynamics { dim, f }
    }
}

impl<F> Dynamics for FnDynamics<F>
where
    F: Fn(f64, &[f64], &SignState, &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, t: f64, x: &[f64], signs: &SignState, dx: &mut [f64]) {
        (self.f)(t, x, signs, dx)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rk4,
    Euler,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Rk4 => "rk4",
            Scheme::Euler => "euler",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub sign_policy: SignPolicy,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_scheme() -> Scheme {
    Scheme::Rk4
}
fn default_stride() -> usize {
    10
}

impl IntegratorConfig {
    /// RK4, `dt = 1e-3`, every 10th step recorded, `sign(0) = 0`.
    pub fn new(t_end: f64) -> Self {
        IntegratorConfig {
            dt: default_dt(),
            t_end,
            scheme: Scheme::Rk4,
            sign_policy: SignPolicy::default(),
            record_stride: default_stride(),
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_policy(mut self, policy: SignPolicy) -> Self {
        self.sign_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::param(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(Error::param("record_stride must be >= 1"));
        }
        self.sign_policy.validate()
    }

    /// Number of steps, `round(t_end / dt)`, at least one.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// Recorded samples of one integration.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    states: Vec<f64>,
    dim: usize,
    pub dt_used: f64,
    pub scheme_used: Scheme,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.dim.max(1))
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.state(self.len() - 1))
    }

    /// CSV with header `t,x_1,...,x_d`, full-precision decimals.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t")?;
        for i in 1..=self.dim {
            write!(w, ",x_{i}")?;
        }
        writeln!(w)?;
        for (k, t) in self.times.iter().enumerate() {
            write!(w, "{t:?}")?;
            for v in self.state(k) {
                write!(w, ",{v:?}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Integrates and stores every recorded sample.
pub fn integrate<D: Dynamics + ?Sized>(field: &D, x0: &[f64], cfg: &IntegratorConfig) -> Result<Trajectory> {
    let dim = field.dim();
    let mut times = Vec::new();
    let mut states = Vec::new();
    integrate_with(field, x0, cfg, |t, x| {
        times.push(t);
        states.extend_from_slice(x);
    })?;
    Ok(Trajectory { times, states, dim, dt_used: cfg.dt, scheme_used: cfg.scheme })
}

/// Integrates, handing each recorded sample `(t, x)` to `on_record` instead
/// of storing it. Samples are taken at steps `0, stride, 2·stride, …`.
pub fn integrate_with<D, F>(field: &D, x0: &[f64], cfg: &IntegratorConfig, mut on_record: F) -> Result<()>
where
    D: Dynamics + ?Sized,
    F: FnMut(f64, &[f64]),
{
    cfg.validate()?;
    let d = field.dim();
    if x0.len() != d {
        return Err(Error::param(format!("initial state has dimension {}, field expects {d}", x0.len())));
    }
    let policy = cfg.sign_policy;
    let dt = cfg.dt;

    let mut latch = Vec::new();
    let mut switch_buf = Vec::new();
    if policy.has_hysteresis() && field.switch_count() > 0 {
        switch_buf = vec![0.0; field.switch_count()];
        field.switching_values(x0, &mut switch_buf);
        latch = switch_buf.iter().map(|&s| policy.sign(s)).collect();
    }

    let mut x = x0.to_vec();
    check_finite(&x, 0.0)?;
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut tmp = vec![0.0; d];

    on_record(0.0, &x);
    for step in 1..=cfg.steps() {
        let t = (step - 1) as f64 * dt;
        {
            let signs = if latch.is_empty() {
                SignState::pure(&policy)
            } else {
                SignState::latched(&policy, &latch)
            };
            match cfg.scheme {
                Scheme::Euler => {
                    field.rhs(t, &x, &signs, &mut k1);
                    for (xi, k) in x.iter_mut().zip(&k1) {
                        *xi += dt * k;
                    }
                }
                Scheme::Rk4 => {
                    let half = 0.5 * dt;
                    field.rhs(t, &x, &signs, &mut k1);
                    axpy_into(&x, half, &k1, &mut tmp);
                    field.rhs(t + half, &tmp, &signs, &mut k2);
                    axpy_into(&x, half, &k2, &mut tmp);
                    field.rhs(t + half, &tmp, &signs, &mut k3);
                    axpy_into(&x, dt, &k3, &mut tmp);
                    field.rhs(t + dt, &tmp, &signs, &mut k4);
                    let w = dt / 6.0;
                    for i in 0..d {
                        x[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                    }
                }
            }
        }
        let t_now = step as f64 * dt;
        check_finite(&x, t_now)?;
        if !latch.is_empty() {
            field.switching_values(&x, &mut switch_buf);
            for (l, &s) in latch.iter_mut().zip(&switch_buf) {
                *l = policy.update_latch(*l, s);
            }
        }
        if step % cfg.record_stride == 0 {
            on_record(t_now, &x);
        }
    }
    Ok(())
}

#[inline]
fn axpy_into(x: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + a * ki;
    }
}

fn check_finite(x: &[f64], time: f64) -> Result<()> {
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    if !norm2.is_finite() || norm2 > DIVERGENCE_NORM * DIVERGENCE_NORM {
        return Err(Error::Divergence { time, cell: None });
    }
    Ok(())
}

/// Mean of `values` over the samples whose time lies in the trailing
/// `window_fraction` of the recorded time span.
pub fn trailing_mean(times: &[f64], values: &[f64], window_fraction: f64) -> Result<f64> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::param(format!("window fraction {window_fraction} outside (0, 1]")));
    }
    let (Some(&t0), Some(&t1)) = (times.first(), times.last()) else {
        return Err(Error::EmptyTrajectory);
    };
    let start = t1 - window_fraction * (t1 - t0);
    let cut = start - 1e-9 * (t1 - t0).abs().max(1.0);
    let (sum, count) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= cut)
        .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
    Ok(sum / count as f64)
}

/// Steady-state statistic: mean of `metric` over the trailing window.
pub fn steady_state_stat<M>(traj: &Trajectory, metric: M, window_fraction: f64) -> Result<f64>
where
    M: Fn(f64, &[f64]) -> f64,
{
    let values: Vec<f64> = traj.times.iter().zip(traj.states()).map(|(&t, x)| metric(t, x)).collect();
    trailing_mean(&traj.times, &values, window_fraction)
}
