//! Multiplex networks of identical piecewise-smooth nodes.
//!
//! Node `i` evolves as
//!
//! ```text
//! ẋ_i = f(x_i; t) − c Σ_j L_ij Γ (x_j − x_i) − c_d Σ_j Ld_ij Γ_d sign(x_j − x_i)
//! ```
//!
//! with `L`, `Ld` graph Laplacians (`L_ij = −1` for neighbours). The diagonal
//! terms vanish because `x_i − x_i = 0`, so each node only sums over its
//! neighbours, in ascending index order. For two nodes joined by one edge
//! this is `f(x_1) + cΓ(x_2 − x_1) + c_dΓ_d sign(x_2 − x_1)`.

use std::io::Write;

use crate::dynamics::{SignPolicy, SignState, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::integrator::{integrate_with, trailing_mean, Dynamics, IntegratorConfig, Trajectory};
use crate::matgraph::{Laplacian, Matrix};

/// Gains, inner coupling matrices and layer topologies.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplexCoupling {
    pub c: f64,
    pub gamma: Matrix,
    pub laplacian: Laplacian,
    pub cd: f64,
    pub gamma_d: Matrix,
    pub laplacian_d: Laplacian,
}

impl MultiplexCoupling {
    /// Identity inner matrices, both layers on the same graph.
    pub fn shared(n: usize, laplacian: Laplacian, c: f64, cd: f64) -> Self {
        MultiplexCoupling {
            c,
            gamma: Matrix::identity(n),
            laplacian: laplacian.clone(),
            cd,
            gamma_d: Matrix::identity(n),
            laplacian_d: laplacian,
        }
    }

    pub fn with_gains(&self, c: f64, cd: f64) -> Self {
        MultiplexCoupling { c, cd, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel {
    pub node: VectorFieldSpec,
    pub coupling: MultiplexCoupling,
}

impl NetworkModel {
    pub fn new(node: VectorFieldSpec, coupling: MultiplexCoupling) -> Result<Self> {
        let m = NetworkModel { node, coupling };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.node.dim();
        let k = &self.coupling;
        if k.laplacian.node_count() != k.laplacian_d.node_count() {
            return Err(Error::param(format!(
                "layer sizes differ: L has {} nodes, L_d has {}",
                k.laplacian.node_count(),
                k.laplacian_d.node_count()
            )));
        }
        if k.gamma.dim() != n || k.gamma_d.dim() != n {
            return Err(Error::param(format!(
                "inner coupling matrices must be {n}x{n} (got {} and {})",
                k.gamma.dim(),
                k.gamma_d.dim()
            )));
        }
        for (name, g) in [("c", k.c), ("c_d", k.cd)] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::param(format!("gain {name} = {g} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        self.coupling.laplacian.node_count()
    }

    pub fn node_dim(&self) -> usize {
        self.node.dim()
    }

    pub fn state_dim(&self) -> usize {
        self.nodes() * self.node_dim()
    }

    pub fn with_gains(&self, c: f64, cd: f64) -> Self {
        NetworkModel { node: self.node.clone(), coupling: self.coupling.with_gains(c, cd) }
    }

    /// Relabels node `i` as `perm[i]` in both layers.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let k = &self.coupling;
        NetworkModel::new(
            self.node.clone(),
            MultiplexCoupling {
                laplacian: k.laplacian.permuted(perm)?,
                laplacian_d: k.laplacian_d.permuted(perm)?,
                ..k.clone()
            },
        )
    }
}

#[derive(Clone, Copy, Debug)]
struct SignLink {
    other: usize,
    weight: f64,
    edge: usize,
    low_end: bool,
}

/// The coupled right-hand side on `R^{N·n}`.
pub struct NetworkField<'a> {
    model: &'a NetworkModel,
    policy: SignPolicy,
    diffusive: Vec<Vec<(usize, f64)>>,
    discontinuous: Vec<Vec<SignLink>>,
    sign_edges: Vec<(usize, usize)>,
    node_switches: usize,
}

/// Builds the network vector field. `policy` is used by [`NetworkField::eval`];
/// under [`integrate`](crate::integrator::integrate) the integrator's policy applies.
pub fn assemble(model: &NetworkModel, policy: SignPolicy) -> Result<NetworkField<'_>> {
    model.validate()?;
    policy.validate()?;
    let nn = model.nodes();
    let k = &model.coupling;
    let diffusive = (0..nn)
        .map(|i| k.laplacian.neighbors(i).iter().map(|&j| (j, -k.laplacian.get(i, j))).collect())
        .collect();
    let sign_edges = k.laplacian_d.edges().to_vec();
    let mut discontinuous = vec![Vec::new(); nn];
    for (e, &(a, b)) in sign_edges.iter().enumerate() {
        let weight = -k.laplacian_d.get(a, b);
        discontinuous[a].push(SignLink { other: b, weight, edge: e, low_end: true });
        discontinuous[b].push(SignLink { other: a, weight, edge: e, low_end: false });
    }
    for links in &mut discontinuous {
        links.sort_by_key(|l| l.other);
    }
    Ok(NetworkField {
        model,
        policy,
        diffusive,
        discontinuous,
        sign_edges,
        node_switches: model.node.switch_count(),
    })
}

const STACK: usize = 16;

impl NetworkField<'_> {
    pub fn model(&self) -> &NetworkModel {
        self.model
    }

    /// Evaluates the field with the policy given to [`assemble`].
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.model.state_dim() {
            return Err(Error::param(format!(
                "network state has dimension {}, expected {}",
                x.len(),
                self.model.state_dim()
            )));
        }
        let mut dx = vec![0.0; x.len()];
        self.rhs(t, x, &SignState::pure(&self.policy), &mut dx);
        Ok(dx)
    }

    /// Coupling contribution only (`f` omitted), under this field's policy.
    pub fn coupling_term(&self, x: &[f64]) -> Vec<f64> {
        let mut dx = vec![0.0; x.len()];
        self.add_coupling(x, &SignState::pure(&self.policy), &mut dx);
        dx
    }

    fn add_coupling(&self, x: &[f64], signs: &SignState, dx: &mut [f64]) {
        let n = self.model.node_dim();
        let k = &self.model.coupling;
        let mut heap;
        let mut stack = [0.0; STACK];
        let acc: &mut [f64] = if n <= STACK {
            &mut stack[..n]
        } else {
            heap = vec![0.0; n];
            &mut heap
        };
        let sign_base = self.model.nodes() * self.node_switches;

        for i in 0..self.model.nodes() {
            let xi = &x[i * n..(i + 1) * n];
            let out = &mut dx[i * n..(i + 1) * n];

            if k.c != 0.0 && !self.diffusive[i].is_empty() {
                acc.fill(0.0);
                for &(j, w) in &self.diffusive[i] {
                    let xj = &x[j * n..(j + 1) * n];
                    for h in 0..n {
                        acc[h] += w * (xj[h] - xi[h]);
                    }
                }
                for h in 0..n {
                    out[h] += k.c * k.gamma.row(h).iter().zip(acc.iter()).map(|(g, a)| g * a).sum::<f64>();
                }
            }

            if k.cd != 0.0 && !self.discontinuous[i].is_empty() {
                acc.fill(0.0);
                for link in &self.discontinuous[i] {
                    let xj = &x[link.other * n..(link.other + 1) * n];
                    for h in 0..n {
                        let s = if signs.policy().has_hysteresis() {
                            // latch is kept for the low-to-high orientation of each edge
                            let id = sign_base + link.edge * n + h;
                            let (lo, hi) = if link.low_end { (xi[h], xj[h]) } else { (xj[h], xi[h]) };
                            let v = signs.sign(id, hi - lo);
                            if link.low_end { v } else { -v }
                        } else {
                            signs.policy().sign(xj[h] - xi[h])
                        };
                        acc[h] += link.weight * s;
                    }
                }
                for h in 0..n {
                    out[h] += k.cd * k.gamma_d.row(h).iter().zip(acc.iter()).map(|(g, a)| g * a).sum::<f64>();
                }
            }
        }
    }
}

impl Dynamics for NetworkField<'_> {
    fn dim(&self) -> usize {
        self.model.state_dim()
    }

    fn switch_count(&self) -> usize {
        self.model.nodes() * self.node_switches + self.sign_edges.len() * self.model.node_dim()
    }

    fn switching_values(&self, x: &[f64], out: &mut [f64]) {
        let n = self.model.node_dim();
        let ks = self.node_switches;
        for i in 0..self.model.nodes() {
            self.model.node.switching_values(&x[i * n..(i + 1) * n], &mut out[i * ks..(i + 1) * ks]);
        }
        let base = self.model.nodes() * ks;
        for (e, &(a, b)) in self.sign_edges.iter().enumerate() {
            for h in 0..n {
                out[base + e * n + h] = x[b * n + h] - x[a * n + h];
            }
        }
    }

    fn rhs(&self, t: f64, x: &[f64], signs: &SignState, dx: &mut [f64]) {
        let n = self.model.node_dim();
        for i in 0..self.model.nodes() {
            self.model.node.eval_into(
                &x[i * n..(i + 1) * n],
                t,
                signs,
                i * self.node_switches,
                &mut dx[i * n..(i + 1) * n],
            );
        }
        self.add_coupling(x, signs, dx);
    }
}

/// Per-node deviation from the network average, `e_i = x_i − x̄`.
pub fn node_errors(states: &[f64], n: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 || !states.len().is_multiple_of(n) || states.is_empty() {
        return Err(Error::param(format!("state length {} is not a multiple of n = {n}", states.len())));
    }
    let nodes = states.len() / n;
    let mut mean = vec![0.0; n];
    for xi in states.chunks_exact(n) {
        for (m, v) in mean.iter_mut().zip(xi) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= nodes as f64;
    }
    Ok(states.chunks_exact(n).map(|xi| xi.iter().zip(&mean).map(|(v, m)| v - m).collect()).collect())
}

/// Global synchronization error `e_s = (1/N) Σ_i ‖x_i − x̄‖₂`.
pub fn sync_error(states: &[f64], n: usize) -> Result<f64> {
    let errs = node_errors(states, n)?;
    let nodes = errs.len() as f64;
    Ok(errs.iter().map(|e| e.iter().map(|v| v * v).sum::<f64>().sqrt()).sum::<f64>() / nodes)
}

/// `e_s` on the recorded time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SyncMetrics {
    pub times: Vec<f64>,
    pub e_s: Vec<f64>,
    /// `‖e_i‖` per recorded sample, per node (when requested).
    pub node_norms: Option<Vec<Vec<f64>>>,
}

impl SyncMetrics {
    /// Mean `e_s` over the trailing `window_fraction` of the horizon.
    pub fn trailing(&self, window_fraction: f64) -> Result<f64> {
        trailing_mean(&self.times, &self.e_s, window_fraction)
    }

    pub fn final_error(&self) -> Option<f64> {
        self.e_s.last().copied()
    }
}

fn node_norms(states: &[f64], n: usize) -> Vec<f64> {
    node_errors(states, n)
        .expect("state dimension checked")
        .iter()
        .map(|e| e.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

/// Simulates the network and records the trajectory with its `e_s` series.
pub fn simulate(model: &NetworkModel, x0: &[f64], cfg: &IntegratorConfig) -> Result<(Trajectory, SyncMetrics)> {
    let field = assemble(model, cfg.sign_policy)?;
    let traj = crate::integrator::integrate(&field, x0, cfg)?;
    let n = model.node_dim();
    let mut e_s = Vec::with_capacity(traj.len());
    let mut norms = Vec::with_capacity(traj.len());
    for x in traj.states() {
        let nn = node_norms(x, n);
        e_s.push(nn.iter().sum::<f64>() / nn.len() as f64);
        norms.push(nn);
    }
    let metrics = SyncMetrics { times: traj.times.clone(), e_s, node_norms: Some(norms) };
    Ok((traj, metrics))
}

/// Like [`simulate`] but only keeps `e_s` (no state storage).
pub fn simulate_metrics(model: &NetworkModel, x0: &[f64], cfg: &IntegratorConfig) -> Result<SyncMetrics> {
    let field = assemble(model, cfg.sign_policy)?;
    let n = model.node_dim();
    let mut times = Vec::new();
    let mut e_s = Vec::new();
    integrate_with(&field, x0, cfg, |t, x| {
        times.push(t);
        e_s.push(sync_error(x, n).expect("state dimension checked"));
    })?;
    Ok(SyncMetrics { times, e_s, node_norms: None })
}

/// Simulation CSV: `t,e_s` followed by `x_<node>_<component>` columns when
/// `with_states` is set (1-based indices).
pub fn write_simulation_csv<W: Write>(
    mut w: W,
    traj: &Trajectory,
    metrics: &SyncMetrics,
    nodes: usize,
    with_states: bool,
) -> std::io::Result<()> {
    write!(w, "t,e_s")?;
    let n = traj.dim().checked_div(nodes).unwrap_or(0);
    if with_states {
        for i in 1..=nodes {
            for h in 1..=n {
                write!(w, ",x_{i}_{h}")?;
            }
        }
    }
    writeln!(w)?;
    for (k, t) in traj.times.iter().enumerate() {
        write!(w, "{t:?},{:?}", metrics.e_s[k])?;
        if with_states {
            for v in traj.state(k) {
                write!(w, ",{v:?}")?;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}
