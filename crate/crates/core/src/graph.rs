//! Quantum-graph topologies: chains, chains with lateral sites, arbitrary
//! adjacency, and shortest-path distances.
//!
//! Sites are indexed 0-based internally; the edge-list text format and
//! [`ChainSpec::attach_pos`] use the 1-based convention.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid chain spec: {0}")]
    InvalidChainSpec(String),
    #[error("invalid graph: {}", violations.join("; "))]
    InvalidGraph { violations: Vec<String> },
    #[error("edge list parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
}

/// Boundary condition of a chain backbone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Open => write!(f, "open"),
            Boundary::Periodic => write!(f, "periodic"),
        }
    }
}

/// A linear chain of `total_sites` sites, optionally perturbed by
/// `side_sites` pendant vertices all attached to backbone node
/// `attach_pos` (1-based). The backbone keeps `total_sites - side_sites`
/// nodes so the total site count is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSpec {
    pub total_sites: usize,
    pub side_sites: usize,
    /// 1-based backbone position of the lateral sites; `None` for a plain chain.
    pub attach_pos: Option<usize>,
    pub boundary: Boundary,
}

impl ChainSpec {
    pub fn chain(total_sites: usize) -> Self {
        ChainSpec {
            total_sites,
            side_sites: 0,
            attach_pos: None,
            boundary: Boundary::Open,
        }
    }

    pub fn with_side_sites(total_sites: usize, side_sites: usize, attach_pos: usize) -> Self {
        ChainSpec {
            total_sites,
            side_sites,
            attach_pos: Some(attach_pos),
            boundary: Boundary::Open,
        }
    }

    pub fn backbone_len(&self) -> usize {
        self.total_sites - self.side_sites
    }

    /// Backbone position mirror-equivalent to `attach_pos` under relabeling
    /// of the chain, i.e. `n <-> backbone_len + 1 - n`.
    pub fn mirror_attach(&self) -> Option<usize> {
        self.attach_pos.map(|n| self.backbone_len() + 1 - n)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let err = |m: String| Err(GraphError::InvalidChainSpec(m));
        if self.side_sites > 3 {
            return err(format!("side_sites = {} exceeds 3", self.side_sites));
        }
        if self.total_sites < self.side_sites + 2 {
            return err(format!(
                "backbone length {} is below 2",
                self.total_sites as isize - self.side_sites as isize
            ));
        }
        if self.side_sites >= 1 {
            if self.boundary == Boundary::Periodic {
                return err("periodic boundary requires side_sites = 0".into());
            }
            match self.attach_pos {
                None => return err("attach_pos required when side_sites >= 1".into()),
                Some(n) => {
                    let nb = self.backbone_len();
                    if n == 0 || n > nb {
                        return err(format!("attach_pos {} out of range 1..{}", n, nb));
                    }
                }
            }
        } else if self.attach_pos.is_some() {
            return err("attach_pos given but side_sites = 0".into());
        }
        if self.boundary == Boundary::Periodic && self.total_sites < 3 {
            return err("periodic chain needs at least 3 sites".into());
        }
        Ok(())
    }
}

/// An undirected, connected graph of sites with on-site potentials and a
/// uniform hopping scale `K`. Immutable after construction.
#[derive(Debug, Clone)]
pub struct QuantumGraph {
    n_sites: usize,
    neighbors: Vec<Vec<usize>>,
    onsite: Vec<f64>,
    hopping: f64,
}

impl QuantumGraph {
    /// Build a chain per `spec`. All on-site potentials are zero; side sites
    /// occupy the trailing indices.
    pub fn chain(spec: &ChainSpec) -> Result<Self, GraphError> {
        spec.validate()?;
        let n = spec.total_sites;
        let nb = spec.backbone_len();
        let mut edges = Vec::with_capacity(n);
        for i in 0..nb - 1 {
            edges.push((i, i + 1));
        }
        if spec.boundary == Boundary::Periodic {
            edges.push((0, nb - 1));
        }
        if let Some(attach) = spec.attach_pos {
            for k in 0..spec.side_sites {
                edges.push((attach - 1, nb + k));
            }
        }
        Self::from_edges(n, &edges, vec![0.0; n], 1.0)
    }

    /// Build from an explicit symmetric adjacency matrix (row-major, n*n).
    pub fn custom(adjacency: &[Vec<u8>], onsite: Vec<f64>, hopping: f64) -> Result<Self, GraphError> {
        let n = adjacency.len();
        let mut violations = Vec::new();
        if adjacency.iter().any(|row| row.len() != n) {
            return Err(GraphError::InvalidGraph {
                violations: vec!["adjacency matrix is not square".into()],
            });
        }
        let mut edges = Vec::new();
        for i in 0..n {
            if adjacency[i][i] != 0 {
                violations.push(format!("nonzero diagonal at site {}", i + 1));
            }
            for j in i + 1..n {
                if adjacency[i][j] != adjacency[j][i] {
                    violations.push(format!("asymmetric entry at ({}, {})", i + 1, j + 1));
                }
                if adjacency[i][j] > 1 {
                    violations.push(format!("entry at ({}, {}) is not 0/1", i + 1, j + 1));
                }
                if adjacency[i][j] == 1 {
                    edges.push((i, j));
                }
            }
        }
        if onsite.len() != n {
            violations.push(format!("onsite length {} != {} sites", onsite.len(), n));
        }
        if !violations.is_empty() {
            return Err(GraphError::InvalidGraph { violations });
        }
        Self::from_edges(n, &edges, onsite, hopping)
    }

    fn from_edges(
        n: usize,
        edges: &[(usize, usize)],
        onsite: Vec<f64>,
        hopping: f64,
    ) -> Result<Self, GraphError> {
        let mut violations = Vec::new();
        if n == 0 {
            violations.push("graph has no sites".into());
        }
        if !(hopping > 0.0) {
            violations.push(format!("hopping {} is not positive", hopping));
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                violations.push(format!("edge ({}, {}) out of range", i + 1, j + 1));
                continue;
            }
            if i == j {
                violations.push(format!("self-loop at site {}", i + 1));
                continue;
            }
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
            nb.dedup();
        }
        if violations.is_empty() && n > 0 {
            // connectivity by BFS from node 0
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            let mut count = 1;
            while let Some(u) = queue.pop_front() {
                for &v in &neighbors[u] {
                    if !seen[v] {
                        seen[v] = true;
                        count += 1;
                        queue.push_back(v);
                    }
                }
            }
            if count != n {
                violations.push(format!("disconnected: {} of {} sites reachable", count, n));
            }
        }
        if !violations.is_empty() {
            return Err(GraphError::InvalidGraph { violations });
        }
        Ok(QuantumGraph {
            n_sites: n,
            neighbors,
            onsite,
            hopping,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn onsite(&self) -> &[f64] {
        &self.onsite
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.iter().map(|nb| nb.len()).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_edges());
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                if j > i {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// All-pairs hop counts by BFS from every site.
    pub fn shortest_path_distances(&self) -> DistanceMatrix {
        let n = self.n_sites;
        let mut d = vec![0u32; n * n];
        let mut dist = vec![u32::MAX; n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            dist.fill(u32::MAX);
            dist[s] = 0;
            queue.clear();
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &v in &self.neighbors[u] {
                    if dist[v] == u32::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            d[s * n..(s + 1) * n].copy_from_slice(&dist);
        }
        DistanceMatrix { n, d }
    }

    /// Serialize as the plain edge-list text format: a header with the site
    /// count, hopping and nonzero on-site overrides, then one 1-based
    /// "i j" pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("sites {}\n", self.n_sites));
        out.push_str(&format!("hopping {}\n", self.hopping));
        for (i, &e) in self.onsite.iter().enumerate() {
            if e != 0.0 {
                out.push_str(&format!("onsite {} {}\n", i + 1, e));
            }
        }
        out.push_str("edges\n");
        for (i, j) in self.edges() {
            out.push_str(&format!("{} {}\n", i + 1, j + 1));
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut n_sites = None;
        let mut hopping = 1.0;
        let mut onsite_overrides = Vec::new();
        let mut edges = Vec::new();
        let mut in_edges = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |m: String| GraphError::ParseError {
                line: lineno + 1,
                message: m,
            };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !in_edges {
                match fields[0] {
                    "sites" => {
                        let v = fields
                            .get(1)
                            .and_then(|s| s.parse::<usize>().ok())
                            .ok_or_else(|| err("expected `sites <n>`".into()))?;
                        n_sites = Some(v);
                    }
                    "hopping" => {
                        hopping = fields
                            .get(1)
                            .and_then(|s| s.parse::<f64>().ok())
                            .ok_or_else(|| err("expected `hopping <K>`".into()))?;
                    }
                    "onsite" => {
                        let i = fields
                            .get(1)
                            .and_then(|s| s.parse::<usize>().ok())
                            .ok_or_else(|| err("expected `onsite <site> <eps>`".into()))?;
                        let e = fields
                            .get(2)
                            .and_then(|s| s.parse::<f64>().ok())
                            .ok_or_else(|| err("expected `onsite <site> <eps>`".into()))?;
                        onsite_overrides.push((i, e));
                    }
                    "edges" => in_edges = true,
                    other => return Err(err(format!("unknown header field `{}`", other))),
                }
            } else {
                if fields.len() != 2 {
                    return Err(err("expected `i j` edge pair".into()));
                }
                let i = fields[0]
                    .parse::<usize>()
                    .map_err(|_| err(format!("bad site index `{}`", fields[0])))?;
                let j = fields[1]
                    .parse::<usize>()
                    .map_err(|_| err(format!("bad site index `{}`", fields[1])))?;
                if i == 0 || j == 0 {
                    return Err(err("site indices are 1-based".into()));
                }
                edges.push((i - 1, j - 1));
            }
        }
        let n = n_sites.ok_or(GraphError::ParseError {
            line: 0,
            message: "missing `sites` header".into(),
        })?;
        let mut onsite = vec![0.0; n];
        for (i, e) in onsite_overrides {
            if i == 0 || i > n {
                return Err(GraphError::ParseError {
                    line: 0,
                    message: format!("onsite override for site {} out of range", i),
                });
            }
            onsite[i - 1] = e;
        }
        Self::from_edges(n, &edges, onsite, hopping)
    }
}

/// Symmetric matrix of shortest-path hop counts.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<u32>,
}

impl DistanceMatrix {
    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.d[i * self.n + j]
    }

    pub fn max_distance(&self) -> u32 {
        self.d.iter().copied().max().unwrap_or(0)
    }
}
