//! Unweighted undirected graph Laplacians.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::Rng;

use super::eigen::{sym_eigen, Spectrum};
use super::matrix::{Matrix, SymMatrix};
use crate::error::{Error, Result};
use crate::seed;

/// Attempts allowed when resampling an Erdős–Rényi graph until it is connected.
pub const ER_MAX_ATTEMPTS: usize = 64;

/// `L = D − A` for an unweighted undirected graph, with a lazily cached spectrum.
#[derive(Debug)]
pub struct Laplacian {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    matrix: SymMatrix,
    spectrum: OnceLock<Spectrum>,
}

impl Clone for Laplacian {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Laplacian {
            n: self.n,
            edges: self.edges.clone(),
            neighbors: self.neighbors.clone(),
            matrix: self.matrix.clone(),
            spectrum,
        }
    }
}

impl PartialEq for Laplacian {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl Laplacian {
    /// Builds the Laplacian of the graph with the given undirected edges.
    ///
    /// Edges are normalised to `(min, max)`; duplicates collapse. Self-loops and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("graph needs at least one node"));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::param(format!("edge ({i}, {j}) out of range for N = {n}")));
            }
            if i == j {
                return Err(Error::param(format!("self-loop at node {i}")));
            }
            set.insert((i.min(j), i.max(j)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut m = Matrix::zeros(n);
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            m[(i, j)] = -1.0;
            m[(j, i)] = -1.0;
            m[(i, i)] += 1.0;
            m[(j, j)] += 1.0;
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Ok(Laplacian {
            n,
            edges,
            neighbors,
            matrix: SymMatrix::new(m).expect("constructed symmetric"),
            spectrum: OnceLock::new(),
        })
    }

    /// Ring where each node links to its `k` nearest neighbours on either side.
    pub fn ring_k_nearest(n: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("ring needs N >= 2, got {n}")));
        }
        if k < 1 || k > (n - 1) / 2 {
            return Err(Error::param(format!(
                "ring neighbourhood k = {k} outside [1, {}] for N = {n}",
                (n - 1) / 2
            )));
        }
        Self::from_edges(n, (0..n).flat_map(|i| (1..=k).map(move |d| (i, (i + d) % n))))
    }

    pub fn path(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::param(format!("path needs N >= 2, got {n}")));
        }
        Self::from_edges(n, (0..n - 1).map(|i| (i, i + 1)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::from_edges(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))))
    }

    /// G(N, p) random graph, resampled until connected.
    ///
    /// Attempt `a` (starting at 0) draws from `ChaCha8Rng` seeded with
    /// `seed::mix(&[seed, a])`; pairs `(i, j)`, `i < j`, are visited in
    /// lexicographic order and linked when a uniform `[0, 1)` draw is `< p`.
    /// Returns the graph and the number of resamples that were needed.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<(Self, usize)> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("edge probability {p} outside [0, 1]")));
        }
        if n == 0 {
            return Err(Error::param("graph needs at least one node"));
        }
        for attempt in 0..ER_MAX_ATTEMPTS {
            let mut rng = seed::rng(seed::mix(&[seed, attempt as u64]));
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            let g = Self::from_edges(n, edges)?;
            if g.is_connected() {
                return Ok((g, attempt));
            }
        }
        Err(Error::Disconnected { attempts: ER_MAX_ATTEMPTS })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbours of node `i` in ascending order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| sym_eigen(&self.matrix))
    }

    /// Algebraic connectivity (0 for a single node).
    pub fn lambda2(&self) -> f64 {
        self.spectrum().eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    /// Breadth-first connectivity test.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n
    }

    /// Simultaneous relabelling: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        Self::from_edges(self.n, self.edges.iter().map(|&(i, j)| (perm[i], perm[j])))
    }

    /// Plain-text edge list: `N <count>` followed by one `i j` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("N {}\n", self.n);
        for &(i, j) in &self.edges {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::param("empty edge list"))?;
        let n = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["N", count] => count
                .parse::<usize>()
                .map_err(|e| Error::param(format!("bad node count {count:?}: {e}")))?,
            _ => return Err(Error::param(format!("expected `N <count>` header, got {header:?}"))),
        };
        let mut edges = Vec::new();
        for line in lines {
            let parts: Vec<_> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|e| Error::param(format!("bad edge line {line:?}: {e}")))
            };
            match parts.as_slice() {
                [a, b] => edges.push((parse(a)?, parse(b)?)),
                _ => return Err(Error::param(format!("bad edge line {line:?}"))),
            }
        }
        Self::from_edges(n, edges)
    }
}
