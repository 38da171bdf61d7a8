//! Exact diagonalization of the reduced pairing model in the seniority-zero
//! sector (every level doubly occupied or empty), level occupation numbers,
//! and the BCS-form fit extracting a chemical potential and pairing
//! parameter from them.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::spectral::eigendecompose_symmetric;

#[derive(Debug, Error)]
pub enum ManybodyError {
    #[error("n_pairs {0} exceeds {1} levels")]
    TooManyPairs(usize, usize),
    #[error("basis of {0} configurations exceeds the guard of {1}")]
    BasisTooLarge(u128, u128),
    #[error("level count {0} exceeds the 64-level configuration encoding")]
    TooManyLevels(usize),
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    #[error("occupation profile has {0} entries, expected {1}")]
    ProfileLength(usize, usize),
}

const BASIS_GUARD: u128 = 1_000_000;
const DENSE_LIMIT: usize = 4_000;

/// Exact binomial `C(n, k)` in wide integer arithmetic.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Ordered basis of `n_pairs`-subsets of the level set, as bitmasks in
/// lexicographic subset order.
#[derive(Debug, Clone)]
pub struct PairBasis {
    n_levels: usize,
    n_pairs: usize,
    configs: Vec<u64>,
    // (mask, position in `configs`), sorted by mask for O(log n) lookup
    lookup: Vec<(u64, usize)>,
}

impl PairBasis {
    pub fn new(n_levels: usize, n_pairs: usize) -> Result<Self, ManybodyError> {
        if n_levels > 64 {
            return Err(ManybodyError::TooManyLevels(n_levels));
        }
        if n_pairs > n_levels {
            return Err(ManybodyError::TooManyPairs(n_pairs, n_levels));
        }
        let size = binomial(n_levels, n_pairs);
        if size > BASIS_GUARD {
            return Err(ManybodyError::BasisTooLarge(size, BASIS_GUARD));
        }
        let mut configs = Vec::with_capacity(size as usize);
        let mut occupied: Vec<usize> = (0..n_pairs).collect();
        'enumerate: loop {
            let mask = occupied.iter().fold(0u64, |m, &i| m | (1 << i));
            configs.push(mask);
            // next combination in lexicographic order
            let mut i = n_pairs;
            loop {
                if i == 0 {
                    break 'enumerate;
                }
                i -= 1;
                if occupied[i] != i + n_levels - n_pairs {
                    break;
                }
            }
            occupied[i] += 1;
            for j in i + 1..n_pairs {
                occupied[j] = occupied[j - 1] + 1;
            }
        }
        let mut lookup: Vec<(u64, usize)> = configs.iter().copied().zip(0..).collect();
        lookup.sort_unstable();
        Ok(PairBasis {
            n_levels,
            n_pairs,
            configs,
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn config(&self, i: usize) -> u64 {
        self.configs[i]
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.lookup
            .binary_search_by_key(&mask, |&(m, _)| m)
            .ok()
            .map(|i| self.lookup[i].1)
    }
}

/// The pairing Hamiltonian on a [`PairBasis`]: diagonal
/// `sum_occupied 2 E_i - g n_p` and `-g` between configurations related by
/// moving one pair. Stored matrix-free; small bases can be densified.
#[derive(Debug, Clone)]
pub struct PairHamiltonian {
    basis: PairBasis,
    g: f64,
    diag: Vec<f64>,
}

pub fn build_pair_hamiltonian(
    energies: &[f64],
    g: f64,
    n_pairs: usize,
) -> Result<PairHamiltonian, ManybodyError> {
    if !g.is_finite() || energies.iter().any(|e| !e.is_finite()) {
        return Err(ManybodyError::NonFinite("energies or coupling"));
    }
    let basis = PairBasis::new(energies.len(), n_pairs)?;
    let e2: Vec<f64> = energies.iter().map(|&e| 2.0 * e).collect();
    let diag = basis
        .configs
        .iter()
        .map(|&mask| {
            let mut s = 0.0;
            let mut m = mask;
            while m != 0 {
                let i = m.trailing_zeros() as usize;
                s += e2[i];
                m &= m - 1;
            }
            s - g * n_pairs as f64
        })
        .collect();
    Ok(PairHamiltonian { basis, g, diag })
}

impl PairHamiltonian {
    pub fn basis(&self) -> &PairBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `out = H v`, matrix-free.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.basis.n_levels;
        for (row, o) in out.iter_mut().enumerate() {
            *o = self.diag[row] * v[row];
        }
        if self.g == 0.0 {
            return;
        }
        for (row, &mask) in self.basis.configs.iter().enumerate() {
            let amp = -self.g * v[row];
            if amp == 0.0 {
                continue;
            }
            let mut occ = mask;
            while occ != 0 {
                let a = occ.trailing_zeros() as usize;
                occ &= occ - 1;
                let removed = mask & !(1 << a);
                for b in 0..n {
                    if removed & (1 << b) == 0 && b != a {
                        let target = removed | (1 << b);
                        let col = self.basis.index_of(target).expect("closed basis");
                        out[col] += amp;
                    }
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let n = self.basis.n_levels;
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for (row, &mask) in self.basis.configs.iter().enumerate() {
            m[(row, row)] = self.diag[row];
            let mut occ = mask;
            while occ != 0 {
                let a = occ.trailing_zeros() as usize;
                occ &= occ - 1;
                let removed = mask & !(1 << a);
                for b in 0..n {
                    if removed & (1 << b) == 0 && b != a {
                        let target = removed | (1 << b);
                        let col = self.basis.index_of(target).expect("closed basis");
                        m[(row, col)] += -self.g;
                    }
                }
            }
        }
        m
    }

    /// Ground energy and normalized ground vector. Dense below
    /// `DENSE_LIMIT`, Lanczos with full reorthogonalization above.
    pub fn ground_state(&self) -> (f64, Vec<f64>) {
        let dim = self.dim();
        if dim == 0 {
            return (0.0, Vec::new());
        }
        if dim == 1 {
            return (self.diag[0], vec![1.0]);
        }
        if dim <= DENSE_LIMIT {
            let eig = eigendecompose_symmetric(&self.to_dense()).expect("symmetric by construction");
            let v = eig.basis().column(0).iter().copied().collect();
            return (eig.energies()[0], v);
        }
        self.lanczos_ground()
    }

    fn lanczos_ground(&self) -> (f64, Vec<f64>) {
        let dim = self.dim();
        let max_iter = 400.min(dim);
        // precomputed pair-move targets make the matvec memory-bound
        // instead of lookup-bound
        let moves = self.move_table();
        let matvec = |v: &[f64], out: &mut [f64]| {
            for (row, o) in out.iter_mut().enumerate() {
                *o = self.diag[row] * v[row];
            }
            if self.g != 0.0 {
                for (row, targets) in moves.iter().enumerate() {
                    let amp = -self.g * v[row];
                    if amp != 0.0 {
                        for &col in targets {
                            out[col as usize] += amp;
                        }
                    }
                }
            }
        };
        // deterministic start with nonzero ground overlap (ground vector is
        // sign-definite for g > 0)
        let mut q = vec![1.0 / (dim as f64).sqrt(); dim];
        let mut basis: Vec<Vec<f64>> = vec![q.clone()];
        let mut alphas = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![0.0; dim];
        let mut prev_e = f64::INFINITY;
        // full reorthogonalization is affordable below this many vectors;
        // above it, reorthogonalize against a sliding window (ground-state
        // estimates are insensitive to ghost copies of converged pairs)
        let reorth_window = if dim <= 20_000 { usize::MAX } else { 8 };
        for it in 0..max_iter {
            matvec(&q, &mut w);
            if let Some(beta) = betas.last() {
                let qp = &basis[basis.len() - 2];
                for i in 0..dim {
                    w[i] -= beta * qp[i];
                }
            }
            let alpha: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
            for i in 0..dim {
                w[i] -= alpha * q[i];
            }
            let start = basis.len().saturating_sub(reorth_window);
            for b in &basis[start..] {
                let c: f64 = b.iter().zip(&w).map(|(a, x)| a * x).sum();
                for i in 0..dim {
                    w[i] -= c * b[i];
                }
            }
            alphas.push(alpha);
            let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if it % 5 == 4 || beta < 1e-14 || it + 1 == max_iter {
                let (e0, _) = tridiag_ground(&alphas, &betas);
                if (prev_e - e0).abs() < 1e-13 * e0.abs().max(1.0) || beta < 1e-14 {
                    break;
                }
                prev_e = e0;
            }
            if beta < 1e-14 {
                break;
            }
            betas.push(beta);
            for i in 0..dim {
                w[i] /= beta;
            }
            q = w.clone();
            basis.push(q.clone());
        }
        let (e0, coeffs) = tridiag_ground(&alphas, &betas);
        let mut v = vec![0.0; dim];
        for (c, b) in coeffs.iter().zip(&basis) {
            for i in 0..dim {
                v[i] += c * b[i];
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
        (e0, v)
    }

    fn move_table(&self) -> Vec<Vec<u32>> {
        let n = self.basis.n_levels;
        self.basis
            .configs
            .iter()
            .map(|&mask| {
                let mut targets = Vec::new();
                let mut occ = mask;
                while occ != 0 {
                    let a = occ.trailing_zeros() as usize;
                    occ &= occ - 1;
                    let removed = mask & !(1 << a);
                    for b in 0..n {
                        if removed & (1 << b) == 0 && b != a {
                            let target = removed | (1 << b);
                            let col = self.basis.index_of(target).expect("closed basis");
                            targets.push(col as u32);
                        }
                    }
                }
                targets
            })
            .collect()
    }
}

fn tridiag_ground(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = eigendecompose_symmetric(&t).expect("tridiagonal symmetric");
    (eig.energies()[0], eig.basis().column(0).iter().copied().collect())
}

/// Per-level pair occupations `nu_i` of the many-body ground state.
#[derive(Debug, Clone)]
pub struct OccupationProfile {
    nu: Vec<f64>,
    n_pairs: usize,
    /// Set when the noninteracting ground state is degenerate at the Fermi
    /// level; the profile is then the symmetric (equal-weight) combination,
    /// i.e. the g -> 0+ limit.
    pub degenerate_ground: bool,
}

impl OccupationProfile {
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }
}

/// Occupations from the exact ground state at coupling `g`. At `g = 0` the
/// profile is the filled Fermi sea; a degenerate Fermi shell is filled
/// fractionally (the symmetric g -> 0+ limit) and flagged.
pub fn ground_occupations(
    energies: &[f64],
    g: f64,
    n_pairs: usize,
) -> Result<OccupationProfile, ManybodyError> {
    let n = energies.len();
    if n_pairs > n {
        return Err(ManybodyError::TooManyPairs(n_pairs, n));
    }
    if g == 0.0 {
        return Ok(free_filling(energies, n_pairs));
    }
    let h = build_pair_hamiltonian(energies, g, n_pairs)?;
    let (_, v) = h.ground_state();
    let mut nu = vec![0.0; n];
    for (k, &mask) in h.basis().configs.iter().enumerate() {
        let w = v[k] * v[k];
        let mut m = mask;
        while m != 0 {
            let i = m.trailing_zeros() as usize;
            nu[i] += w;
            m &= m - 1;
        }
    }
    Ok(OccupationProfile {
        nu,
        n_pairs,
        degenerate_ground: false,
    })
}

fn free_filling(energies: &[f64], n_pairs: usize) -> OccupationProfile {
    let n = energies.len();
    let mut nu = vec![0.0; n];
    if n_pairs == 0 {
        return OccupationProfile {
            nu,
            n_pairs,
            degenerate_ground: false,
        };
    }
    let tol = 1e-12;
    let fermi = energies[n_pairs - 1];
    // levels strictly below the Fermi shell fill completely; the shell
    // shares whatever remains equally
    let below: Vec<usize> = (0..n).filter(|&i| energies[i] < fermi - tol).collect();
    let shell: Vec<usize> = (0..n)
        .filter(|&i| (energies[i] - fermi).abs() <= tol)
        .collect();
    for &i in &below {
        nu[i] = 1.0;
    }
    let remaining = n_pairs - below.len();
    let frac = remaining as f64 / shell.len() as f64;
    for &i in &shell {
        nu[i] = frac;
    }
    OccupationProfile {
        nu,
        n_pairs,
        degenerate_ground: shell.len() > remaining || frac.fract() != 0.0,
    }
}

/// BCS double-occupation probability
/// `v^2 = (1 - (E - mu)/sqrt((E - mu)^2 + Delta^2)) / 2`.
pub fn bcs_occupation(e: f64, mu: f64, delta: f64) -> f64 {
    let t = e - mu;
    0.5 * (1.0 - t / (t * t + delta * delta).sqrt())
}

/// Result of fitting the BCS form through an occupation profile.
#[derive(Debug, Clone, Copy)]
pub struct BcsFitResult {
    pub mu: f64,
    pub delta: f64,
    pub rss: f64,
    /// `|sum_i v_i^2 - n_p|` at the fitted parameters.
    pub constraint_gap: f64,
    /// Set for a step-like profile where `Delta` is indeterminate and 0 is
    /// returned.
    pub degenerate: bool,
}

/// Deterministic least-squares fit of `(mu, Delta)`. The particle-number
/// sum rule `sum_i v_i^2 = n_p` fixes `mu` at every trial `Delta` (the sum
/// is strictly increasing in `mu`), so the search is a 1-D scan over
/// `Delta` in `(0, bandwidth]` refined by golden-section descent.
pub fn fit_bcs(profile: &OccupationProfile, energies: &[f64]) -> Result<BcsFitResult, ManybodyError> {
    let n = energies.len();
    if profile.nu.len() != n {
        return Err(ManybodyError::ProfileLength(profile.nu.len(), n));
    }
    if profile.nu.iter().any(|x| !x.is_finite()) || energies.iter().any(|e| !e.is_finite()) {
        return Err(ManybodyError::NonFinite("profile or energies"));
    }
    let nu = &profile.nu;
    let n_pairs = profile.n_pairs;

    // step-like profile: Delta indeterminate
    let smearing = nu
        .iter()
        .map(|&x| x.min(1.0 - x).abs())
        .fold(0.0f64, f64::max);
    if smearing < 1e-12 {
        let mu = if n_pairs == 0 {
            energies[0] - 1.0
        } else if n_pairs == n {
            energies[n - 1] + 1.0
        } else {
            0.5 * (energies[n_pairs - 1] + energies[n_pairs])
        };
        return Ok(BcsFitResult {
            mu,
            delta: 0.0,
            rss: 0.0,
            constraint_gap: 0.0,
            degenerate: true,
        });
    }

    let bandwidth = energies[n - 1] - energies[0];
    let mu_for = |delta: f64| -> f64 {
        let mut lo = energies[0] - 64.0 * (bandwidth + delta);
        let mut hi = energies[n - 1] + 64.0 * (bandwidth + delta);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let s: f64 = energies.iter().map(|&e| bcs_occupation(e, mid, delta)).sum();
            if s < n_pairs as f64 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let rss_for = |delta: f64| -> (f64, f64) {
        let mu = mu_for(delta);
        let rss = energies
            .iter()
            .zip(nu)
            .map(|(&e, &x)| {
                let r = x - bcs_occupation(e, mu, delta);
                r * r
            })
            .sum();
        (rss, mu)
    };

    // coarse geometric grid over Delta, then golden-section refinement
    let grid_lo = 1e-8 * bandwidth;
    let steps = 512;
    let ratio = (bandwidth / grid_lo).powf(1.0 / (steps - 1) as f64);
    let mut best = (f64::INFINITY, grid_lo);
    let mut d = grid_lo;
    for _ in 0..steps {
        let (rss, _) = rss_for(d);
        if rss < best.0 {
            best = (rss, d);
        }
        d *= ratio;
    }
    let mut a = best.1 / ratio;
    let mut b = (best.1 * ratio).min(bandwidth * 4.0);
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut e = a + phi * (b - a);
    let mut fc = rss_for(c).0;
    let mut fe = rss_for(e).0;
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 * bandwidth.max(1.0) {
            break;
        }
        if fc < fe {
            b = e;
            e = c;
            fe = fc;
            c = b - phi * (b - a);
            fc = rss_for(c).0;
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + phi * (b - a);
            fe = rss_for(e).0;
        }
    }
    let delta = 0.5 * (a + b);
    let (rss, mu) = rss_for(delta);
    let total: f64 = energies.iter().map(|&e| bcs_occupation(e, mu, delta)).sum();
    Ok(BcsFitResult {
        mu,
        delta,
        rss,
        constraint_gap: (total - n_pairs as f64).abs(),
        degenerate: false,
    })
}
