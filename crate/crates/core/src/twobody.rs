//! The two-particle eigenproblem on a graph, resolved into exchange-parity
//! sectors, with either the on-site Hubbard attraction or the fully
//! nonlocal pairing interaction, plus the derived observables: depairing
//! energy, density of states, pair-distance distribution P(r) and the
//! coherence length.
//!
//! Basis conventions. The symmetric (singlet-orbital) sector uses the
//! normalized states `(|ab> + |ba>)/sqrt(2)` for `a < b` together with the
//! doubly-occupied sites `|aa>`; the antisymmetric sector uses
//! `(|ab> - |ba>)/sqrt(2)`. Sector dimensions are `N(N+1)/2` and
//! `N(N-1)/2`. Basis pairs are ordered lexicographically.

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{Boundary, ChainSpec, DistanceMatrix, GraphError, QuantumGraph};
use crate::spectral::single_particle_hamiltonian;

#[derive(Debug, Error)]
pub enum TwoBodyError {
    #[error("state and distance matrix dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("empty spectrum")]
    EmptySpectrum,
    #[error("state index {0} out of range ({1} states)")]
    StateIndex(usize, usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Which pairing interaction enters the two-body operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionKind {
    /// On-site attraction `-g delta_{y1 y2}`.
    Hubbard,
    /// Fully nonlocal pairing: `-g` between every pair of doubly-occupied
    /// sites, a rank-one attraction in the diagonal-pair channel.
    Bcs,
}

/// Interaction kind plus its strength in units of `K`. Negative strengths
/// are admitted for the repulsively-bound-state check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub kind: InteractionKind,
    pub strength: f64,
}

impl Interaction {
    pub fn bcs(strength: f64) -> Self {
        Interaction {
            kind: InteractionKind::Bcs,
            strength,
        }
    }

    pub fn hubbard(strength: f64) -> Self {
        Interaction {
            kind: InteractionKind::Hubbard,
            strength,
        }
    }
}

/// Dense symmetric operators on the two parity sectors of a graph.
#[derive(Debug, Clone)]
pub struct TwoBodyProblem {
    graph: QuantumGraph,
    interaction: Interaction,
    sym_pairs: Vec<(usize, usize)>,
    antisym_pairs: Vec<(usize, usize)>,
    sym_op: DMatrix<f64>,
    antisym_op: DMatrix<f64>,
}

/// Eigenpairs of both sectors. The ground state is the lowest
/// symmetric-sector state; its wavefunction on the full `N x N` site grid
/// is normalized to unit total probability.
#[derive(Debug, Clone)]
pub struct TwoBodySolution {
    n_sites: usize,
    sym_energies: Vec<f64>,
    antisym_energies: Vec<f64>,
    sym_states: DMatrix<f64>,
    sym_pairs: Vec<(usize, usize)>,
    depairing_energy: f64,
}

pub fn assemble(graph: &QuantumGraph, interaction: Interaction) -> TwoBodyProblem {
    let n = graph.n_sites();
    let h = single_particle_hamiltonian(graph);
    let g = interaction.strength;

    let mut sym_pairs = Vec::with_capacity(n * (n + 1) / 2);
    for a in 0..n {
        for b in a..n {
            sym_pairs.push((a, b));
        }
    }
    let mut antisym_pairs = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            antisym_pairs.push((a, b));
        }
    }

    // row a of the upper triangle including the diagonal
    let index_sym = |a: usize, b: usize| -> usize { a * n - a * (a + 1) / 2 + b };

    let dim_s = sym_pairs.len();
    let mut sym_op = DMatrix::<f64>::zeros(dim_s, dim_s);
    let sqrt2 = std::f64::consts::SQRT_2;
    for (row, &(a, b)) in sym_pairs.iter().enumerate() {
        if a == b {
            sym_op[(row, row)] += 2.0 * h[(a, a)];
            for &c in graph.neighbors(a) {
                let col = index_sym(a.min(c), a.max(c));
                sym_op[(row, col)] += sqrt2 * h[(a, c)];
            }
        } else {
            sym_op[(row, row)] += h[(a, a)] + h[(b, b)];
            // move the particle at b
            for &c in graph.neighbors(b) {
                if c == a {
                    sym_op[(row, index_sym(a, a))] += sqrt2 * h[(b, a)];
                } else {
                    sym_op[(row, index_sym(a.min(c), a.max(c)))] += h[(b, c)];
                }
            }
            // move the particle at a
            for &c in graph.neighbors(a) {
                if c == b {
                    sym_op[(row, index_sym(b, b))] += sqrt2 * h[(a, b)];
                } else {
                    sym_op[(row, index_sym(b.min(c), b.max(c)))] += h[(a, c)];
                }
            }
        }
    }
    match interaction.kind {
        InteractionKind::Hubbard => {
            for a in 0..n {
                let i = index_sym(a, a);
                sym_op[(i, i)] += -g;
            }
        }
        InteractionKind::Bcs => {
            for a in 0..n {
                for c in 0..n {
                    sym_op[(index_sym(a, a), index_sym(c, c))] += -g;
                }
            }
        }
    }

    // antisymmetric sector: no diagonal states, the interaction vanishes
    let dim_a = antisym_pairs.len();
    let index_anti = |a: usize, b: usize| -> usize { a * n - a * (a + 1) / 2 + b - a - 1 };
    let mut antisym_op = DMatrix::<f64>::zeros(dim_a, dim_a);
    for (row, &(a, b)) in antisym_pairs.iter().enumerate() {
        antisym_op[(row, row)] += h[(a, a)] + h[(b, b)];
        for &c in graph.neighbors(b) {
            if c != a {
                let (p, q) = (a.min(c), a.max(c));
                let sign = if c < a { -1.0 } else { 1.0 };
                antisym_op[(row, index_anti(p, q))] += sign * h[(b, c)];
            }
        }
        for &c in graph.neighbors(a) {
            if c != b {
                let (p, q) = (b.min(c), b.max(c));
                let sign = if c > b { -1.0 } else { 1.0 };
                antisym_op[(row, index_anti(p, q))] += sign * h[(a, c)];
            }
        }
    }

    TwoBodyProblem {
        graph: graph.clone(),
        interaction,
        sym_pairs,
        antisym_pairs,
        sym_op,
        antisym_op,
    }
}

impl TwoBodyProblem {
    pub fn graph(&self) -> &QuantumGraph {
        &self.graph
    }

    pub fn interaction(&self) -> Interaction {
        self.interaction
    }

    pub fn sym_dim(&self) -> usize {
        self.sym_pairs.len()
    }

    pub fn antisym_dim(&self) -> usize {
        self.antisym_pairs.len()
    }

    pub fn sym_operator(&self) -> &DMatrix<f64> {
        &self.sym_op
    }

    pub fn antisym_operator(&self) -> &DMatrix<f64> {
        &self.antisym_op
    }

    /// Eigenvalues of both sectors, ascending, without eigenvectors.
    pub fn sector_eigenvalues(&self) -> (Vec<f64>, Vec<f64>) {
        let mut s: Vec<f64> = self.sym_op.symmetric_eigenvalues().iter().copied().collect();
        let mut a: Vec<f64> = self
            .antisym_op
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        s.sort_by(|x, y| x.partial_cmp(y).unwrap());
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        (s, a)
    }

    /// Full solve: spectra of both sectors plus symmetric-sector
    /// eigenvectors for wavefunction observables.
    pub fn solve(&self) -> TwoBodySolution {
        let eig = self.sym_op.clone().symmetric_eigen();
        let dim = self.sym_pairs.len();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[x].partial_cmp(&eig.eigenvalues[y]).unwrap());
        let mut sym_energies = Vec::with_capacity(dim);
        let mut sym_states = DMatrix::<f64>::zeros(dim, dim);
        for (col, &src) in order.iter().enumerate() {
            sym_energies.push(eig.eigenvalues[src]);
            sym_states.set_column(col, &eig.eigenvectors.column(src));
        }
        let mut antisym_energies: Vec<f64> = self
            .antisym_op
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        antisym_energies.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let depairing_energy = sym_energies[1] - sym_energies[0];
        TwoBodySolution {
            n_sites: self.graph.n_sites(),
            sym_energies,
            antisym_energies,
            sym_states,
            sym_pairs: self.sym_pairs.clone(),
            depairing_energy,
        }
    }

    /// Lowest two symmetric-sector eigenvalues only; the cheap path for
    /// depairing sweeps that do not need wavefunctions.
    pub fn symmetric_edge(&self) -> (f64, f64) {
        let vals = self.sym_op.symmetric_eigenvalues();
        let mut lo = f64::INFINITY;
        let mut second = f64::INFINITY;
        for &v in vals.iter() {
            if v < lo {
                second = lo;
                lo = v;
            } else if v < second {
                second = v;
            }
        }
        (lo, second)
    }
}

impl TwoBodySolution {
    pub fn sym_energies(&self) -> &[f64] {
        &self.sym_energies
    }

    pub fn antisym_energies(&self) -> &[f64] {
        &self.antisym_energies
    }

    /// Minimum energy to break the bound pair: the gap between the two
    /// lowest symmetric-sector eigenvalues.
    pub fn depairing_energy(&self) -> f64 {
        self.depairing_energy
    }

    /// Wavefunction of the k-th symmetric eigenstate on the full site grid,
    /// `phi(i, j) = phi(j, i)`, unit norm over all ordered pairs.
    pub fn symmetric_state(&self, k: usize) -> Result<DMatrix<f64>, TwoBodyError> {
        if k >= self.sym_energies.len() {
            return Err(TwoBodyError::StateIndex(k, self.sym_energies.len()));
        }
        let n = self.n_sites;
        let mut phi = DMatrix::<f64>::zeros(n, n);
        let inv_sqrt2 = 1.0 / std::f64::consts::SQRT_2;
        for (row, &(a, b)) in self.sym_pairs.iter().enumerate() {
            let c = self.sym_states[(row, k)];
            if a == b {
                phi[(a, a)] = c;
            } else {
                phi[(a, b)] = c * inv_sqrt2;
                phi[(b, a)] = c * inv_sqrt2;
            }
        }
        Ok(phi)
    }

    /// Ground-state wavefunction (lowest symmetric state).
    pub fn ground_state(&self) -> DMatrix<f64> {
        self.symmetric_state(0).expect("nonempty spectrum")
    }
}

/// Histogram of two-body eigenvalues per energy bin and sector. Bins are
/// anchored at zero: bin `k` covers `[k w, (k+1) w)`.
#[derive(Debug, Clone)]
pub struct DosHistogram {
    pub bin_width: f64,
    pub first_bin: i64,
    pub symmetric: Vec<usize>,
    pub antisymmetric: Vec<usize>,
    pub combined: Vec<usize>,
}

impl DosHistogram {
    pub fn bin_start(&self, index: usize) -> f64 {
        (self.first_bin + index as i64) as f64 * self.bin_width
    }

    pub fn n_bins(&self) -> usize {
        self.combined.len()
    }
}

pub fn dos_histogram(
    sym: &[f64],
    antisym: &[f64],
    bin_width: f64,
) -> Result<DosHistogram, TwoBodyError> {
    if sym.is_empty() && antisym.is_empty() {
        return Err(TwoBodyError::EmptySpectrum);
    }
    assert!(bin_width > 0.0, "bin width must be positive");
    let bin_of = |e: f64| (e / bin_width).floor() as i64;
    let all = sym.iter().chain(antisym.iter());
    let lo = all.clone().map(|&e| bin_of(e)).min().unwrap();
    let hi = all.map(|&e| bin_of(e)).max().unwrap();
    let n_bins = (hi - lo + 1) as usize;
    let mut h = DosHistogram {
        bin_width,
        first_bin: lo,
        symmetric: vec![0; n_bins],
        antisymmetric: vec![0; n_bins],
        combined: vec![0; n_bins],
    };
    for &e in sym {
        let k = (bin_of(e) - lo) as usize;
        h.symmetric[k] += 1;
        h.combined[k] += 1;
    }
    for &e in antisym {
        let k = (bin_of(e) - lo) as usize;
        h.antisymmetric[k] += 1;
        h.combined[k] += 1;
    }
    Ok(h)
}

/// `P(r)`: probability that the two particles sit at graph distance `r`,
/// indexed by `r = 0..=max_distance`. Sums to one.
pub fn pair_distance_distribution(
    phi: &DMatrix<f64>,
    dist: &DistanceMatrix,
) -> Result<Vec<f64>, TwoBodyError> {
    let n = phi.nrows();
    if n != dist.n_sites() || phi.ncols() != n {
        return Err(TwoBodyError::DimensionMismatch(n, dist.n_sites()));
    }
    let mut p = vec![0.0; dist.max_distance() as usize + 1];
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = phi[(i, j)] * phi[(i, j)];
            p[dist.get(i, j) as usize] += w;
            total += w;
        }
    }
    if total <= 0.0 {
        return Err(TwoBodyError::ZeroNorm);
    }
    for v in &mut p {
        *v /= total;
    }
    Ok(p)
}

/// Cooper-style coherence length: `xi^2 = sum_ij D_ij^2 |phi(i,j)|^2`.
pub fn coherence_length(phi: &DMatrix<f64>, dist: &DistanceMatrix) -> Result<f64, TwoBodyError> {
    let n = phi.nrows();
    if n != dist.n_sites() || phi.ncols() != n {
        return Err(TwoBodyError::DimensionMismatch(n, dist.n_sites()));
    }
    let mut xi2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = dist.get(i, j) as f64;
            xi2 += d * d * phi[(i, j)] * phi[(i, j)];
        }
    }
    Ok(xi2.sqrt())
}

/// One row of a depairing sweep over side-site positions.
#[derive(Debug, Clone, Copy)]
pub struct DepairingPoint {
    /// 1-based attach position of the lateral sites.
    pub attach_pos: usize,
    pub g: f64,
    pub depairing: f64,
    pub coherence_length: f64,
}

/// Depairing energy and coherence length for every lateral-site position
/// `n = 1..=backbone` of a fixed-size chain family, for each coupling in
/// `gs`. Rows are ordered by `(attach_pos, g)`.
pub fn depairing_sweep(
    total_sites: usize,
    side_sites: usize,
    gs: &[f64],
    kind: InteractionKind,
) -> Result<Vec<DepairingPoint>, TwoBodyError> {
    assert!(side_sites >= 1, "sweep varies a lateral-site position");
    let backbone = total_sites - side_sites;
    let mut grid = Vec::new();
    for n in 1..=backbone {
        for &g in gs {
            grid.push((n, g));
        }
    }
    grid.par_iter()
        .map(|&(n, g)| {
            let spec = ChainSpec {
                total_sites,
                side_sites,
                attach_pos: Some(n),
                boundary: Boundary::Open,
            };
            let graph = QuantumGraph::chain(&spec)?;
            let problem = assemble(&graph, Interaction { kind, strength: g });
            let solution = problem.solve();
            let dist = graph.shortest_path_distances();
            let xi = coherence_length(&solution.ground_state(), &dist)?;
            Ok(DepairingPoint {
                attach_pos: n,
                g,
                depairing: solution.depairing_energy(),
                coherence_length: xi,
            })
        })
        .collect()
}
