//! Piecewise-smooth node vector fields `f(x; t)`.
//!
//! Three of the built-in systems are affine fields with relay (sign) terms,
//!
//! ```text
//! f(x) = A x + b + Σ_k d_k · sign(w_kᵀ x)
//! ```
//!
//! and are emitted in that normal form. The fourth, a cascaded oscillator with
//! a continuous piecewise-linear second component, has its own evaluator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matgraph::Matrix;

/// How `sign(s)` is resolved on and near a switching surface.
///
/// `at_zero` is the value returned for `s == 0`. With a positive
/// `hysteresis` band the sign keeps its last latched value while
/// `|s| <= hysteresis`; the latch itself is owned by the integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignPolicy {
    #[serde(default)]
    pub at_zero: f64,
    #[serde(default)]
    pub hysteresis: f64,
}

impl Default for SignPolicy {
    fn default() -> Self {
        SignPolicy { at_zero: 0.0, hysteresis: 0.0 }
    }
}

impl SignPolicy {
    pub fn new(at_zero: f64, hysteresis: f64) -> Result<Self> {
        let p = SignPolicy { at_zero, hysteresis };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.at_zero) {
            return Err(Error::param(format!("sign(0) = {} outside [-1, 1]", self.at_zero)));
        }
        if !(self.hysteresis >= 0.0 && self.hysteresis.is_finite()) {
            return Err(Error::param(format!("hysteresis band {} must be >= 0", self.hysteresis)));
        }
        Ok(())
    }

    #[inline]
    pub fn sign(&self, s: f64) -> f64 {
        if s > 0.0 {
            1.0
        } else if s < 0.0 {
            -1.0
        } else {
            self.at_zero
        }
    }

    pub fn has_hysteresis(&self) -> bool {
        self.hysteresis > 0.0
    }

    /// Step-boundary latch update for one switching function.
    #[inline]
    pub fn update_latch(&self, latched: f64, s: f64) -> f64 {
        if s.abs() > self.hysteresis {
            self.sign(s)
        } else {
            latched
        }
    }
}

/// Sign evaluator handed to field evaluations: the policy plus, when
/// hysteresis is active, the latched sign of every switching function.
#[derive(Clone, Copy, Debug)]
pub struct SignState<'a> {
    policy: &'a SignPolicy,
    latch: Option<&'a [f64]>,
}

impl<'a> SignState<'a> {
    pub fn pure(policy: &'a SignPolicy) -> Self {
        SignState { policy, latch: None }
    }

    pub fn latched(policy: &'a SignPolicy, latch: &'a [f64]) -> Self {
        SignState { policy, latch: Some(latch) }
    }

    pub fn policy(&self) -> &SignPolicy {
        self.policy
    }

    /// `sign(s)` for switching function number `k`.
    #[inline]
    pub fn sign(&self, k: usize, s: f64) -> f64 {
        match self.latch {
            Some(latch) if s.abs() <= self.policy.hysteresis => latch[k],
            _ => self.policy.sign(s),
        }
    }
}

/// One relay term `gain · sign(switchᵀ x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelayTerm {
    pub gain: Vec<f64>,
    pub switch: Vec<f64>,
}

/// `f(x) = A x + b + Σ_k d_k sign(w_kᵀ x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineRelay {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub relays: Vec<RelayTerm>,
}

impl AffineRelay {
    pub fn new(a: Matrix, b: Vec<f64>, relays: Vec<RelayTerm>) -> Result<Self> {
        let n = a.dim();
        if b.len() != n {
            return Err(Error::param(format!("offset has length {}, expected {n}", b.len())));
        }
        for (k, r) in relays.iter().enumerate() {
            if r.gain.len() != n || r.switch.len() != n {
                return Err(Error::param(format!("relay term {k} does not have dimension {n}")));
            }
        }
        if b.iter().chain(relays.iter().flat_map(|r| r.gain.iter().chain(&r.switch))).any(|v| !v.is_finite()) {
            return Err(Error::param("affine relay field has non-finite coefficients"));
        }
        Ok(AffineRelay { a, b, relays })
    }

    fn single(a: &[[f64; 3]], gain: &[f64], switch: &[f64]) -> Self {
        let n = gain.len();
        let rows: Vec<Vec<f64>> = a.iter().map(|r| r[..n].to_vec()).collect();
        AffineRelay {
            a: Matrix::from_rows(&rows).expect("builtin matrix"),
            b: vec![0.0; n],
            relays: vec![RelayTerm { gain: gain.to_vec(), switch: switch.to_vec() }],
        }
    }
}

/// The named node systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// `ẋ = [[-1,-1],[2,3]] x − [0, 2 sign(x₁+x₂)]ᵀ`
    Relay,
    /// Cascaded oscillator with equilibria of `x₂` at ±2.
    PwsOscillator,
    /// Three-dimensional chaotic jerk circuit with a `sign(x₁)` nonlinearity.
    Sprott,
    /// Damped oscillator with stable equilibria at `(±1, 0)`.
    Bistable,
    /// User-supplied affine-plus-relay field.
    AffineRelay,
}

impl FieldKind {
    pub const BUILTINS: [FieldKind; 4] =
        [FieldKind::Relay, FieldKind::PwsOscillator, FieldKind::Sprott, FieldKind::Bistable];

    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Relay => "relay",
            FieldKind::PwsOscillator => "pws_oscillator",
            FieldKind::Sprott => "sprott",
            FieldKind::Bistable => "bistable",
            FieldKind::AffineRelay => "affine_relay",
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FieldKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FieldKind::BUILTINS
            .into_iter()
            .chain([FieldKind::AffineRelay])
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::param(format!(
                    "unknown system {s:?}; expected one of relay, pws_oscillator, sprott, bistable"
                ))
            })
    }
}

/// A node vector field.
#[derive(Clone, Debug, PartialEq)]
pub enum VectorFieldSpec {
    PwsOscillator,
    Affine { kind: FieldKind, field: AffineRelay },
}

/// Looks up a built-in system by name.
pub fn builtin_spec(name: &str) -> Result<VectorFieldSpec> {
    let kind: FieldKind = name.parse()?;
    if kind == FieldKind::AffineRelay {
        return Err(Error::param("affine_relay is not a built-in; supply its matrices"));
    }
    Ok(builtin(kind))
}

/// Built-in system for a kind other than [`FieldKind::AffineRelay`].
pub fn builtin(kind: FieldKind) -> VectorFieldSpec {
    let field = match kind {
        FieldKind::PwsOscillator => return VectorFieldSpec::PwsOscillator,
        FieldKind::Relay => {
            AffineRelay::single(&[[-1.0, -1.0, 0.0], [2.0, 3.0, 0.0]], &[0.0, -2.0], &[1.0, 1.0])
        }
        FieldKind::Sprott => AffineRelay::single(
            &[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -1.0, -0.5]],
            &[0.0, 0.0, 1.0],
            &[1.0, 0.0, 0.0],
        ),
        FieldKind::Bistable => {
            AffineRelay::single(&[[0.0, 1.0, 0.0], [-1.0, -1.0, 0.0]], &[0.0, 1.0], &[1.0, 0.0])
        }
        FieldKind::AffineRelay => panic!("affine_relay has no built-in definition"),
    };
    VectorFieldSpec::Affine { kind, field }
}

/// Second component of the oscillator: continuous, piecewise linear.
#[inline]
pub fn oscillator_f2(x2: f64) -> f64 {
    if x2 <= -1.0 {
        -x2 - 2.0
    } else if x2 < 1.0 {
        x2
    } else {
        -x2 + 2.0
    }
}

impl VectorFieldSpec {
    pub fn affine_relay(field: AffineRelay) -> Self {
        VectorFieldSpec::Affine { kind: FieldKind::AffineRelay, field }
    }

    pub fn kind(&self) -> FieldKind {
        match self {
            VectorFieldSpec::PwsOscillator => FieldKind::PwsOscillator,
            VectorFieldSpec::Affine { kind, .. } => *kind,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            VectorFieldSpec::PwsOscillator => 2,
            VectorFieldSpec::Affine { field, .. } => field.a.dim(),
        }
    }

    pub fn affine(&self) -> Option<&AffineRelay> {
        match self {
            VectorFieldSpec::Affine { field, .. } => Some(field),
            _ => None,
        }
    }

    /// Number of scalar switching functions `w_kᵀ x`.
    pub fn switch_count(&self) -> usize {
        self.affine().map_or(0, |f| f.relays.len())
    }

    pub fn switching_values(&self, x: &[f64], out: &mut [f64]) {
        if let Some(f) = self.affine() {
            for (o, r) in out.iter_mut().zip(&f.relays) {
                *o = dot(&r.switch, x);
            }
        }
    }

    pub fn is_autonomous(&self) -> bool {
        !matches!(self, VectorFieldSpec::PwsOscillator)
    }

    /// Evaluates `f(x; t)` into `out`; switching function `k` of this node is
    /// looked up in `signs` as `sign_base + k`.
    #[inline]
    pub fn eval_into(&self, x: &[f64], t: f64, signs: &SignState, sign_base: usize, out: &mut [f64]) {
        match self {
            VectorFieldSpec::PwsOscillator => {
                out[0] = -x[0] + 2.0 * x[1] * t.sin();
                out[1] = oscillator_f2(x[1]);
            }
            VectorFieldSpec::Affine { field, .. } => {
                field.a.mul_vec_into(x, out);
                for (o, b) in out.iter_mut().zip(&field.b) {
                    *o += b;
                }
                for (k, r) in field.relays.iter().enumerate() {
                    let s = signs.sign(sign_base + k, dot(&r.switch, x));
                    if s != 0.0 {
                        for (o, d) in out.iter_mut().zip(&r.gain) {
                            *o += d * s;
                        }
                    }
                }
            }
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `f(x; t)` with relay terms resolved by `policy` (no hysteresis latch).
pub fn eval_field(spec: &VectorFieldSpec, x: &[f64], t: f64, policy: &SignPolicy) -> Result<Vec<f64>> {
    if x.len() != spec.dim() {
        return Err(Error::param(format!(
            "state has dimension {}, {} expects {}",
            x.len(),
            spec.kind(),
            spec.dim()
        )));
    }
    let mut out = vec![0.0; x.len()];
    spec.eval_into(x, t, &SignState::pure(policy), 0, &mut out);
    Ok(out)
}
