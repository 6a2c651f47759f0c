//! Configuration schema and the `pwsync` subcommands.
//!
//! One experiment is one TOML file. Individual keys can be overridden with
//! `--set section.key=value` (the value is parsed as TOML, falling back to a
//! plain string), and `--seed` overrides `ics.seed`. Precedence is
//! flag > file > default. Unknown keys are rejected.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Deserialize;

use crate::dynamics::{builtin_spec, AffineRelay, RelayTerm, SignPolicy, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::integrator::{IntegratorConfig, Scheme};
use crate::matgraph::{Laplacian, Matrix, SymMatrix};
use crate::network::{simulate, write_simulation_csv, MultiplexCoupling, NetworkModel};
use crate::quad::{
    threshold_c1, threshold_t1, threshold_t2, threshold_t3, threshold_t4, QSplit, ThresholdReport,
};
use crate::sweep::{linspace, run_sweep, IcSource, SweepSpec, DEFAULT_N_IC, DEFAULT_T_END, DEFAULT_WINDOW};

// ---------------------------------------------------------------------------
// schema
// ---------------------------------------------------------------------------

/// A matrix given either by its diagonal or by full rows.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum MatrixInput {
    Diag(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

impl MatrixInput {
    pub fn to_matrix(&self) -> Result<Matrix> {
        match self {
            MatrixInput::Diag(d) => Ok(Matrix::from_diag(d)),
            MatrixInput::Full(rows) => Matrix::from_rows(rows),
        }
    }

    fn to_sym(&self, what: &str) -> Result<SymMatrix> {
        SymMatrix::new(self.to_matrix()?).map_err(|e| Error::Config(format!("{what}: {e}")))
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub name: Option<String>,
    pub a: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
    pub relays: Option<Vec<RelayTerm>>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub kind: Option<String>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub p: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub edges: Option<Vec<[usize; 2]>>,
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub cd: f64,
    pub gamma: Option<MatrixInput>,
    pub gamma_d: Option<MatrixInput>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IntegrateSection {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub scheme: Option<Scheme>,
    pub record_stride: Option<usize>,
    pub sign_at_zero: Option<f64>,
    pub sign_hysteresis: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct IcsSection {
    pub x0: Option<Vec<Vec<f64>>>,
    pub box_lo: Option<Vec<f64>>,
    pub box_hi: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub c_grid: Option<Vec<f64>>,
    pub cd_grid: Option<Vec<f64>>,
    pub n_ic: Option<usize>,
    pub window: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsSection {
    pub theorem: Option<String>,
    pub q: Option<MatrixInput>,
    pub q_prime: Option<MatrixInput>,
    pub p: Option<MatrixInput>,
    pub g: Option<MatrixInput>,
    pub m: Option<Vec<f64>>,
    pub lambda2: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub graph: GraphSection,
    pub graph_d: Option<GraphSection>,
    #[serde(default)]
    pub coupling: CouplingSection,
    #[serde(default)]
    pub integrate: IntegrateSection,
    #[serde(default)]
    pub ics: IcsSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub thresholds: ThresholdsSection,
}

/// Every accepted key as `(key, subcommands, description)`.
pub const CONFIG_KEYS: &[(&str, &str, &str)] = &[
    ("system.name", "tsw", "relay | pws_oscillator | sprott | bistable | affine_relay"),
    ("system.a", "tsw", "affine_relay: matrix rows of A"),
    ("system.b", "tsw", "affine_relay: constant offset b (default 0)"),
    ("system.relays", "tsw", "affine_relay: list of { gain = [..], switch = [..] }"),
    ("graph.kind", "tswg", "ring | path | complete | erdos_renyi | edges"),
    ("graph.n", "tswg", "node count"),
    ("graph.k", "tswg", "ring: neighbours on each side"),
    ("graph.p", "tswg", "erdos_renyi: edge probability"),
    ("graph.seed", "tswg", "erdos_renyi: seed (default 0)"),
    ("graph.edges", "tswg", "edges: list of [i, j] pairs (0-based)"),
    ("graph.file", "tswg", "edges: edge-list file (`N <count>` then `i j` lines)"),
    ("graph_d.*", "sw", "sign-coupling layer, same keys as [graph] (default: copy of [graph])"),
    ("coupling.c", "tsw", "diffusive gain (default 0)"),
    ("coupling.cd", "sw", "sign-coupling gain (default 0)"),
    ("coupling.gamma", "tsw", "inner matrix: diagonal list or full rows (default I)"),
    ("coupling.gamma_d", "tsw", "sign inner matrix: diagonal list or full rows (default I)"),
    ("integrate.dt", "sw", "step size (default 1e-3)"),
    ("integrate.t_end", "sw", "horizon (default 100 for simulate, 200 for sweep)"),
    ("integrate.scheme", "sw", "rk4 | euler (default rk4)"),
    ("integrate.record_stride", "sw", "record every k-th step (default 10)"),
    ("integrate.sign_at_zero", "sw", "value of sign(0) in [-1, 1] (default 0)"),
    ("integrate.sign_hysteresis", "sw", "hysteresis band (default 0)"),
    ("ics.x0", "sw", "explicit initial state, one list per node"),
    ("ics.box_lo", "sw", "lower corner of the per-node sampling box"),
    ("ics.box_hi", "sw", "upper corner of the per-node sampling box"),
    ("ics.seed", "sw", "sampling seed; sweep master seed (default 0, --seed overrides)"),
    ("sweep.c_grid", "w", "ascending c values (default 21 points on [0, 2])"),
    ("sweep.cd_grid", "w", "ascending c_d values (default 21 points on [0, 2])"),
    ("sweep.n_ic", "w", "initial conditions per cell (default 5)"),
    ("sweep.window", "sw", "trailing fraction of the horizon for steady-state e_s (default 0.1)"),
    ("thresholds.theorem", "t", "t1 | t2 | c1 | t3 | t4"),
    ("thresholds.q", "t", "Q (t1, t3); diagonal q (c1)"),
    ("thresholds.q_prime", "t", "Q' (t2, t4); Q- = Q - Q' when q is given"),
    ("thresholds.p", "t", "P (default I)"),
    ("thresholds.g", "t", "G (t1, t2; default sym(PΓ))"),
    ("thresholds.m", "t", "relaxed-QUAD slack m (t3, t4)"),
    ("thresholds.lambda2", "t", "override λ2(L) instead of computing it from [graph]"),
];

fn keys_help(tag: char) -> String {
    let mut s = String::from("Config keys:\n");
    for (key, cmds, desc) in CONFIG_KEYS {
        if cmds.contains(tag) {
            let _ = writeln!(s, "  {key:<28} {desc}");
        }
    }
    s
}

/// Reads the config file (if any) and applies `--set` overrides.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: toml::Table = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            text.parse().map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    ExperimentConfig::deserialize(toml::Value::Table(table)).map_err(|e| Error::Config(e.to_string()))
}

fn apply_override(table: &mut toml::Table, ov: &str) -> Result<()> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {ov:?} is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        cur = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {part} is not a section")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

// ---------------------------------------------------------------------------
// config → model
// ---------------------------------------------------------------------------

impl ExperimentConfig {
    pub fn node_field(&self) -> Result<VectorFieldSpec> {
        let name = self.system.name.as_deref().ok_or_else(|| Error::Config("system.name is required".into()))?;
        let s = &self.system;
        if name == "affine_relay" {
            let a = Matrix::from_rows(s.a.as_ref().ok_or_else(|| Error::Config("system.a is required".into()))?)?;
            let b = s.b.clone().unwrap_or_else(|| vec![0.0; a.dim()]);
            let relays = s.relays.clone().unwrap_or_default();
            return Ok(VectorFieldSpec::affine_relay(AffineRelay::new(a, b, relays)?));
        }
        if s.a.is_some() || s.b.is_some() || s.relays.is_some() {
            return Err(Error::Config("system.a, system.b and system.relays need name = \"affine_relay\"".into()));
        }
        builtin_spec(name).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn laplacian(&self) -> Result<Laplacian> {
        build_graph(&self.graph, "graph")
    }

    pub fn laplacian_d(&self) -> Result<Laplacian> {
        match &self.graph_d {
            Some(g) => build_graph(g, "graph_d"),
            None => self.laplacian(),
        }
    }

    fn inner(m: &Option<MatrixInput>, n: usize) -> Result<Matrix> {
        m.as_ref().map_or_else(|| Ok(Matrix::identity(n)), MatrixInput::to_matrix)
    }

    pub fn model(&self) -> Result<NetworkModel> {
        let node = self.node_field()?;
        let n = node.dim();
        let k = &self.coupling;
        NetworkModel::new(
            node,
            MultiplexCoupling {
                c: k.c,
                gamma: Self::inner(&k.gamma, n)?,
                laplacian: self.laplacian()?,
                cd: k.cd,
                gamma_d: Self::inner(&k.gamma_d, n)?,
                laplacian_d: self.laplacian_d()?,
            },
        )
    }

    pub fn integrator(&self, default_t_end: f64) -> Result<IntegratorConfig> {
        let s = &self.integrate;
        let mut cfg = IntegratorConfig::new(s.t_end.unwrap_or(default_t_end));
        if let Some(dt) = s.dt {
            cfg.dt = dt;
        }
        if let Some(sc) = s.scheme {
            cfg.scheme = sc;
        }
        if let Some(k) = s.record_stride {
            cfg.record_stride = k;
        }
        cfg.sign_policy = SignPolicy::new(s.sign_at_zero.unwrap_or(0.0), s.sign_hysteresis.unwrap_or(0.0))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn ic_source(&self, nodes: usize, n: usize) -> Result<IcSource> {
        let s = &self.ics;
        match (&s.x0, &s.box_lo, &s.box_hi) {
            (Some(x0), None, None) => {
                if x0.len() != nodes || x0.iter().any(|x| x.len() != n) {
                    return Err(Error::Config(format!("ics.x0 must list {nodes} vectors of length {n}")));
                }
                Ok(IcSource::Explicit(x0.concat()))
            }
            (None, Some(lo), Some(hi)) => Ok(IcSource::Box { lo: lo.clone(), hi: hi.clone() }),
            (None, None, None) => Err(Error::Config("[ics] needs x0 or box_lo/box_hi".into())),
            _ => Err(Error::Config("[ics] takes either x0 or both box_lo and box_hi".into())),
        }
    }

    fn window(&self) -> f64 {
        self.sweep.window.unwrap_or(DEFAULT_WINDOW)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let model = self.model()?;
        let ics = self.ic_source(model.nodes(), model.node_dim())?;
        let grid = |g: &Option<Vec<f64>>| g.clone().unwrap_or_else(|| linspace(0.0, 2.0, 21));
        let spec = SweepSpec {
            c_grid: grid(&self.sweep.c_grid),
            cd_grid: grid(&self.sweep.cd_grid),
            n_ic: self.sweep.n_ic.unwrap_or(DEFAULT_N_IC),
            ics,
            seed: self.ics.seed,
            integrator: self.integrator(DEFAULT_T_END)?,
            window_fraction: self.window(),
            model,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn threshold_report(&self) -> Result<ThresholdReport> {
        let t = &self.thresholds;
        let theorem = t.theorem.as_deref().ok_or_else(|| Error::Config("thresholds.theorem is required".into()))?;
        fn required<'a>(m: &'a Option<MatrixInput>, key: &str, theorem: &str) -> Result<&'a MatrixInput> {
            m.as_ref().ok_or_else(|| Error::Config(format!("thresholds.{key} is required for {theorem}")))
        }
        let need = |m, key| required(m, key, theorem);
        let lambda2 = || -> Result<f64> {
            match t.lambda2 {
                Some(l) => Ok(l),
                None => Ok(self.laplacian()?.lambda2()),
            }
        };
        let n_hint = t
            .q
            .as_ref()
            .or(t.q_prime.as_ref())
            .map(|m| m.to_matrix().map(|m| m.dim()))
            .transpose()?
            .ok_or_else(|| Error::Config("thresholds.q or thresholds.q_prime is required".into()))?;
        let p = match &t.p {
            Some(p) => p.to_sym("thresholds.p")?,
            None => SymMatrix::identity(n_hint),
        };
        let gamma = Self::inner(&self.coupling.gamma, n_hint)?;
        let gamma_d = Self::inner(&self.coupling.gamma_d, n_hint)?;
        let g = || -> Result<SymMatrix> {
            match &t.g {
                Some(g) => g.to_sym("thresholds.g"),
                None => Ok(p.matmul(&gamma).sym_part()),
            }
        };
        let split = || -> Result<QSplit> {
            let qp = need(&t.q_prime, "q_prime")?.to_sym("thresholds.q_prime")?;
            match &t.q {
                Some(q) => QSplit::new(&q.to_matrix()?, qp),
                None => {
                    // Q⁻ is not needed for the threshold; any negative definite choice will do
                    QSplit::from_parts(Matrix::scaled_identity(qp.dim(), -1.0), qp)
                }
            }
        };
        let m = || t.m.clone().ok_or_else(|| Error::Config(format!("thresholds.m is required for {theorem}")));
        match theorem {
            "t1" => threshold_t1(&need(&t.q, "q")?.to_matrix()?, lambda2()?, &g()?),
            "t2" => threshold_t2(&split()?, &g()?, lambda2()?),
            "c1" => {
                let q = need(&t.q, "q")?.to_matrix()?;
                if !q.is_diagonal(0.0) || !gamma.is_diagonal(0.0) {
                    return Err(Error::hypothesis("c1 needs diagonal q and Γ"));
                }
                threshold_c1(&q.diag(), &gamma.diag(), lambda2()?)
            }
            "t3" => threshold_t3(&need(&t.q, "q")?.to_matrix()?, &m()?, &p, &gamma, &gamma_d),
            "t4" => threshold_t4(&split()?, &m()?, &p, &gamma, &gamma_d),
            other => Err(Error::Config(format!("unknown theorem {other:?} (expected t1, t2, c1, t3, t4)"))),
        }
    }
}

fn build_graph(g: &GraphSection, section: &str) -> Result<Laplacian> {
    let kind = g.kind.as_deref().ok_or_else(|| Error::Config(format!("{section}.kind is required")))?;
    let n = || g.n.ok_or_else(|| Error::Config(format!("{section}.n is required for {kind}")));
    match kind {
        "ring" => Laplacian::ring_k_nearest(n()?, g.k.ok_or_else(|| Error::Config(format!("{section}.k is required")))?),
        "path" => Laplacian::path(n()?),
        "complete" => Laplacian::complete(n()?),
        "erdos_renyi" => {
            let p = g.p.ok_or_else(|| Error::Config(format!("{section}.p is required")))?;
            Laplacian::erdos_renyi(n()?, p, g.seed).map(|(l, _)| l)
        }
        "edges" => match (&g.edges, &g.file) {
            (Some(e), None) => Laplacian::from_edges(n()?, e.iter().map(|&[i, j]| (i, j))),
            (None, Some(f)) => {
                let text = fs::read_to_string(f)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", f.display())))?;
                Laplacian::parse_edge_list(&text)
            }
            _ => Err(Error::Config(format!("{section}: kind = \"edges\" needs exactly one of edges or file"))),
        },
        other => Err(Error::Config(format!("unknown graph kind {other:?}"))),
    }
}

// ---------------------------------------------------------------------------
// command line
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(name = "pwsync", version, about = "Synchronization thresholds and simulations for networks of piecewise-smooth systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides ics.seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override a config key, e.g. --set coupling.c=0.5 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coupling-gain thresholds; writes thresholds.csv
    Thresholds(CommonArgs),
    /// Simulate one network; writes simulation.csv
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Include node states in simulation.csv
        #[arg(long)]
        states: bool,
    },
    /// (c, c_d) grid sweep; writes sweep.csv and sweep_manifest.toml
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Worker threads (default: all cores)
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Graph summary and spectrum; writes graph.txt
    Graph(CommonArgs),
}

/// The clap command with the config-key listing attached to each subcommand.
pub fn command() -> clap::Command {
    Cli::command()
        .mut_subcommand("thresholds", |c| c.after_help(keys_help('t')))
        .mut_subcommand("simulate", |c| c.after_help(keys_help('s')))
        .mut_subcommand("sweep", |c| c.after_help(keys_help('w')))
        .mut_subcommand("graph", |c| c.after_help(keys_help('g')))
}

fn config_for(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut sets = common.set.clone();
    if let Some(seed) = common.seed {
        sets.push(format!("ics.seed={seed}"));
    }
    load_config(common.config.as_deref(), &sets)
}

fn write_out(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn cmd_thresholds(common: &CommonArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = config_for(common)?;
    let report = cfg.threshold_report()?;
    writeln!(out, "{}", report.summary())?;
    write!(out, "{}", report.to_kv())?;
    let csv = format!("{}\n{}\n", ThresholdReport::CSV_HEADER, report.csv_row());
    write_out(&common.out, "thresholds.csv", csv.as_bytes())?;
    Ok(())
}

fn cmd_simulate(common: &CommonArgs, states: bool, out: &mut dyn Write) -> Result<()> {
    let cfg = config_for(common)?;
    let model = cfg.model()?;
    let integ = cfg.integrator(100.0)?;
    let x0 = cfg.ic_source(model.nodes(), model.node_dim())?.draw(model.nodes(), cfg.ics.seed);
    let (traj, metrics) = simulate(&model, &x0, &integ).map_err(|e| match e {
        Error::Divergence { time, .. } => Error::Divergence {
            time,
            cell: Some(format!("c = {}, c_d = {}", model.coupling.c, model.coupling.cd)),
        },
        e => e,
    })?;
    let mut buf = Vec::new();
    write_simulation_csv(&mut buf, &traj, &metrics, model.nodes(), states)?;
    let path = write_out(&common.out, "simulation.csv", &buf)?;
    let trailing = metrics.trailing(cfg.window())?;
    writeln!(
        out,
        "trailing e_s = {trailing:e} (window {}, t_end {}, dt {}, {})",
        cfg.window(),
        integ.t_end,
        integ.dt,
        integ.scheme
    )?;
    writeln!(out, "wrote {}", path.display())?;
    Ok(())
}

fn cmd_sweep(common: &CommonArgs, workers: Option<usize>, out: &mut dyn Write) -> Result<()> {
    let spec = config_for(common)?.sweep_spec()?;
    let result = run_sweep(&spec, workers)?;
    let csv = write_out(&common.out, "sweep.csv", result.to_csv_string().as_bytes())?;
    write_out(&common.out, "sweep_manifest.toml", spec.manifest().as_bytes())?;
    let diverged: usize = result.n_diverged.iter().sum();
    writeln!(out, "{} cells, {diverged} diverged runs", result.e_s.len())?;
    writeln!(out, "wrote {}", csv.display())?;
    Ok(())
}

fn cmd_graph(common: &CommonArgs, out: &mut dyn Write) -> Result<()> {
    let lap = config_for(common)?.laplacian()?;
    let spectrum = &lap.spectrum().eigenvalues;
    writeln!(out, "N = {}", lap.node_count())?;
    writeln!(out, "edges = {}", lap.edges().len())?;
    writeln!(out, "lambda2 = {:?}", lap.lambda2())?;
    writeln!(out, "spectrum = {}", spectrum.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" "))?;
    if !lap.is_connected() {
        writeln!(out, "warning: graph is disconnected (lambda2 ~ 0)")?;
    }
    write_out(&common.out, "graph.txt", lap.to_edge_list().as_bytes())?;
    Ok(())
}

/// Parses `args` (including the program name) and runs the chosen
/// subcommand, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return 2;
        }
    };
    let res = match &cli.command {
        Command::Thresholds(c) => cmd_thresholds(c, out),
        Command::Simulate { common, states } => cmd_simulate(common, *states, out),
        Command::Sweep { common, workers } => cmd_sweep(common, *workers, out),
        Command::Graph(c) => cmd_graph(c, out),
    };
    match res {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
