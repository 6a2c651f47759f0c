//! Parallel `(c, c_d)` grid sweeps over random initial conditions.
//!
//! Every run draws its initial condition from `ChaCha8Rng` seeded with
//! `seed::mix(&[master, c_index, cd_index, ic_index])`, so results do not
//! depend on the schedule or on the gains of other cells. Runs are evaluated
//! on a bounded rayon pool and reduced per cell in index order.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::IntegratorConfig;
use crate::network::{simulate_metrics, NetworkModel};
use crate::seed;

/// Default number of initial conditions per cell.
pub const DEFAULT_N_IC: usize = 5;

/// Default trailing window for the steady-state mean.
pub const DEFAULT_WINDOW: f64 = 0.1;

/// Default sweep horizon.
pub const DEFAULT_T_END: f64 = 200.0;

/// Header of the sweep CSV.
pub const CSV_HEADER: &str = "c,c_d,e_s_mean,n_diverged";

/// Where initial conditions come from.
#[derive(Clone, Debug, PartialEq)]
pub enum IcSource {
    /// Every coordinate `h` of every node uniform in `[lo[h], hi[h]]`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// A fixed full network state used for every run.
    Explicit(Vec<f64>),
}

impl IcSource {
    /// `[[0, 1], [0, 0.5], [0, 0.5]]`, the box used for the Sprott sweeps.
    pub fn sprott_box() -> Self {
        IcSource::Box { lo: vec![0.0; 3], hi: vec![1.0, 0.5, 0.5] }
    }

    fn validate(&self, nodes: usize, n: usize) -> Result<()> {
        match self {
            IcSource::Box { lo, hi } => {
                if lo.len() != n || hi.len() != n {
                    return Err(Error::param(format!("IC box must have {n} intervals")));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
                    return Err(Error::param("IC box needs finite bounds with lo <= hi"));
                }
            }
            IcSource::Explicit(x) => {
                if x.len() != nodes * n {
                    return Err(Error::param(format!("explicit IC has length {}, expected {}", x.len(), nodes * n)));
                }
            }
        }
        Ok(())
    }

    /// Initial state for one run.
    pub fn draw(&self, nodes: usize, seed_value: u64) -> Vec<f64> {
        match self {
            IcSource::Explicit(x) => x.clone(),
            IcSource::Box { lo, hi } => {
                let mut rng = seed::rng(seed_value);
                let mut x = Vec::with_capacity(nodes * lo.len());
                for _ in 0..nodes {
                    for (a, b) in lo.iter().zip(hi) {
                        x.push(a + (b - a) * rng.random::<f64>());
                    }
                }
                x
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    /// Everything but the gains, which are overwritten per cell.
    pub model: NetworkModel,
    pub c_grid: Vec<f64>,
    pub cd_grid: Vec<f64>,
    pub n_ic: usize,
    pub ics: IcSource,
    pub seed: u64,
    pub integrator: IntegratorConfig,
    pub window_fraction: f64,
}

impl SweepSpec {
    /// Spec with default `n_ic`, window and horizon.
    pub fn new(model: NetworkModel, c_grid: Vec<f64>, cd_grid: Vec<f64>, ics: IcSource, seed: u64) -> Self {
        SweepSpec {
            model,
            c_grid,
            cd_grid,
            n_ic: DEFAULT_N_IC,
            ics,
            seed,
            integrator: IntegratorConfig::new(DEFAULT_T_END),
            window_fraction: DEFAULT_WINDOW,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.integrator.validate()?;
        for (name, g) in [("c", &self.c_grid), ("c_d", &self.cd_grid)] {
            if g.is_empty() {
                return Err(Error::param(format!("{name} grid is empty")));
            }
            if g.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(Error::param(format!("{name} grid needs finite values >= 0")));
            }
            if g.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::param(format!("{name} grid must be strictly ascending")));
            }
        }
        if self.n_ic == 0 {
            return Err(Error::param("n_ic must be at least 1"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::param(format!("window fraction {} outside (0, 1]", self.window_fraction)));
        }
        self.ics.validate(self.model.nodes(), self.model.node_dim())
    }

    /// Seed of initial condition `k` in cell `(i, j)`.
    pub fn run_seed(&self, i: usize, j: usize, k: usize) -> u64 {
        seed::mix(&[self.seed, i as u64, j as u64, k as u64])
    }

    /// Plain-text echo of the spec, written next to the sweep CSV.
    pub fn manifest(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|a| format!("{a:?}")).collect::<Vec<_>>().join(", ");
        let k = &self.model.coupling;
        let cfg = &self.integrator;
        let mut s = String::new();
        let _ = writeln!(s, "system = \"{}\"", self.model.node.kind());
        let _ = writeln!(s, "nodes = {}", self.model.nodes());
        let _ = writeln!(s, "edges = {}", k.laplacian.edges().len());
        let _ = writeln!(s, "edges_d = {}", k.laplacian_d.edges().len());
        let _ = writeln!(s, "gamma = {:?}", k.gamma.rows());
        let _ = writeln!(s, "gamma_d = {:?}", k.gamma_d.rows());
        let _ = writeln!(s, "c_grid = [{}]", list(&self.c_grid));
        let _ = writeln!(s, "cd_grid = [{}]", list(&self.cd_grid));
        let _ = writeln!(s, "n_ic = {}", self.n_ic);
        match &self.ics {
            IcSource::Box { lo, hi } => {
                let _ = writeln!(s, "ic_lo = [{}]", list(lo));
                let _ = writeln!(s, "ic_hi = [{}]", list(hi));
            }
            IcSource::Explicit(x) => {
                let _ = writeln!(s, "ic_explicit = [{}]", list(x));
            }
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "dt = {:?}", cfg.dt);
        let _ = writeln!(s, "t_end = {:?}", cfg.t_end);
        let _ = writeln!(s, "scheme = \"{}\"", cfg.scheme);
        let _ = writeln!(s, "record_stride = {}", cfg.record_stride);
        let _ = writeln!(s, "sign_at_zero = {:?}", cfg.sign_policy.at_zero);
        let _ = writeln!(s, "sign_hysteresis = {:?}", cfg.sign_policy.hysteresis);
        let _ = writeln!(s, "window = {:?}", self.window_fraction);
        s
    }
}

/// Cell means of trailing-window `e_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub c_grid: Vec<f64>,
    pub cd_grid: Vec<f64>,
    /// Row-major over `c` then `c_d`; `None` when every run diverged.
    pub e_s: Vec<Option<f64>>,
    pub n_diverged: Vec<usize>,
}

impl SweepResult {
    fn index(&self, i: usize, j: usize) -> usize {
        i * self.cd_grid.len() + j
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<f64> {
        self.e_s[self.index(i, j)]
    }

    pub fn diverged(&self, i: usize, j: usize) -> usize {
        self.n_diverged[self.index(i, j)]
    }

    /// Cells whose mean is below `tol` (divergent cells never count).
    pub fn synchronized_count(&self, tol: f64) -> usize {
        self.e_s.iter().filter(|v| v.is_some_and(|e| e < tol)).count()
    }

    /// One row per cell; a cell whose runs all diverged has `e_s_mean = nan`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for (i, c) in self.c_grid.iter().enumerate() {
            for (j, cd) in self.cd_grid.iter().enumerate() {
                let k = self.index(i, j);
                match self.e_s[k] {
                    Some(e) => writeln!(w, "{c:?},{cd:?},{e:?},{}", self.n_diverged[k])?,
                    None => writeln!(w, "{c:?},{cd:?},nan,{}", self.n_diverged[k])?,
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Parses a file written by [`SweepResult::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != CSV_HEADER {
            return Err(Error::Config(format!("expected header {CSV_HEADER:?}, got {header:?}")));
        }
        let mut rows = Vec::new();
        for (ln, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Config(format!("bad sweep CSV row {}: {line:?}", ln + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            let c: f64 = f[0].parse().map_err(|_| bad())?;
            let cd: f64 = f[1].parse().map_err(|_| bad())?;
            let e = if f[2] == "nan" { None } else { Some(f[2].parse::<f64>().map_err(|_| bad())?) };
            let nd: usize = f[3].parse().map_err(|_| bad())?;
            rows.push((c, cd, e, nd));
        }
        let mut c_grid: Vec<f64> = Vec::new();
        let mut cd_grid: Vec<f64> = Vec::new();
        for &(c, cd, _, _) in &rows {
            if !c_grid.contains(&c) {
                c_grid.push(c);
            }
            if !cd_grid.contains(&cd) {
                cd_grid.push(cd);
            }
        }
        if rows.len() != c_grid.len() * cd_grid.len() {
            return Err(Error::Config("sweep CSV is not a full grid".into()));
        }
        for (k, &(c, cd, _, _)) in rows.iter().enumerate() {
            if c != c_grid[k / cd_grid.len()] || cd != cd_grid[k % cd_grid.len()] {
                return Err(Error::Config("sweep CSV rows are not row-major over c then c_d".into()));
            }
        }
        Ok(SweepResult {
            c_grid,
            cd_grid,
            e_s: rows.iter().map(|r| r.2).collect(),
            n_diverged: rows.iter().map(|r| r.3).collect(),
        })
    }
}

/// Outcome of a single run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunOutcome {
    Settled(f64),
    Diverged,
}

/// Simulates one run of cell `(i, j)`.
pub fn run_one(spec: &SweepSpec, i: usize, j: usize, k: usize) -> Result<RunOutcome> {
    let model = spec.model.with_gains(spec.c_grid[i], spec.cd_grid[j]);
    let x0 = spec.ics.draw(model.nodes(), spec.run_seed(i, j, k));
    match simulate_metrics(&model, &x0, &spec.integrator) {
        Ok(m) => Ok(RunOutcome::Settled(m.trailing(spec.window_fraction)?)),
        Err(Error::Divergence { .. }) => Ok(RunOutcome::Diverged),
        Err(e) => Err(e),
    }
}

/// Runs every cell on a pool of at most `workers` threads (all cores when `None`).
pub fn run_sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let (nc, nd, nic) = (spec.c_grid.len(), spec.cd_grid.len(), spec.n_ic);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::param("worker count must be at least 1"));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::param(format!("cannot build worker pool: {e}")))?;
    let outcomes: Vec<RunOutcome> = pool.install(|| {
        (0..nc * nd * nic)
            .into_par_iter()
            .map(|t| run_one(spec, t / (nd * nic), (t / nic) % nd, t % nic))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut e_s = Vec::with_capacity(nc * nd);
    let mut n_diverged = Vec::with_capacity(nc * nd);
    for cell in outcomes.chunks_exact(nic) {
        let settled: Vec<f64> = cell
            .iter()
            .filter_map(|o| match o {
                RunOutcome::Settled(v) => Some(*v),
                RunOutcome::Diverged => None,
            })
            .collect();
        n_diverged.push(nic - settled.len());
        e_s.push((!settled.is_empty()).then(|| settled.iter().sum::<f64>() / settled.len() as f64));
    }
    Ok(SweepResult { c_grid: spec.c_grid.clone(), cd_grid: spec.cd_grid.clone(), e_s, n_diverged })
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}
