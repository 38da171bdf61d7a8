//! Solver for the coupled Richardson equations of the reduced pairing
//! model, for arbitrary single-particle spectra with blocked levels, plus
//! the spectroscopic gap and state counting.
//!
//! For `n_p` pairs on free levels `E_j` the rapidities `e_nu` satisfy
//!
//! ```text
//! 1 + sum_{mu != nu} 2g / (e_mu - e_nu) = sum_j g / (2 E_j - e_nu)
//! ```
//!
//! Continuation is done in the variables `U_k = g * sum_nu 1/(2E_k - e_nu)`
//! rather than in the rapidities themselves. The `U_k` satisfy the
//! equivalent quadratic system
//!
//! ```text
//! U_k^2 - U_k + g * sum_{j != k} (U_j - U_k) / (eta_k - eta_j) = 0
//! ```
//!
//! with `eta_k = 2 E_k`, and they stay real and smooth where rapidities
//! collide and leave the real axis, so branches can be followed through
//! critical couplings that defeat Newton iteration on the bare equations.
//! At `g = 0` the seed is exact: `U_k` is the indicator of the seeded
//! levels. The branch label `sum_k U_k = n_p` is conserved along a branch
//! and is used as an integrity guard. The pair energy comes directly from
//! the converged variables,
//!
//! ```text
//! sum_nu e_nu = sum_k eta_k U_k + g * n_p * (n_p - 1 - L),
//! ```
//!
//! while the individual rapidities (including conjugate pairs past a
//! collision) are reconstructed from the characteristic polynomial
//! `P'(eta_k) = Lambda_k P(eta_k)` and polished by complex Newton on the
//! original equations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{Boundary, ChainSpec, QuantumGraph};
use crate::spectral::graph_spectrum;

#[derive(Debug, Error)]
pub enum RichardsonError {
    #[error("levels must be finite and ascending")]
    BadLevels,
    #[error("blocked index {0} out of range or duplicated")]
    BadBlocked(usize),
    #[error("seed occupation invalid: {0}")]
    BadSeed(String),
    #[error("coupling must be nonnegative, got {0}")]
    NegativeCoupling(f64),
    #[error("n_pairs {0} exceeds {1} free levels")]
    TooManyPairs(usize, usize),
    #[error("continuation breakdown at g = {last_g}: step underflow")]
    ContinuationBreakdown {
        last_g: f64,
        rapidities: Vec<Complex64>,
    },
    #[error("singular Jacobian at g = {0}")]
    SingularJacobian(f64),
    #[error("final polish did not reach the residual bound: {0:.3e}")]
    NotConverged(f64),
    #[error("state count overflow for C({0}, {1})")]
    CountOverflow(usize, usize),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Spectral(#[from] crate::spectral::SpectralError),
}

/// Ascending single-particle levels with a set of blocked (singly occupied)
/// indices excluded from pair scattering.
#[derive(Debug, Clone)]
pub struct LevelSet {
    energies: Vec<f64>,
    blocked: Vec<usize>,
    n_pairs: usize,
}

impl LevelSet {
    pub fn new(energies: Vec<f64>, blocked: Vec<usize>, n_pairs: usize) -> Result<Self, RichardsonError> {
        if energies.is_empty()
            || energies.iter().any(|e| !e.is_finite())
            || energies.windows(2).any(|w| w[1] < w[0])
        {
            return Err(RichardsonError::BadLevels);
        }
        let mut blocked = blocked;
        blocked.sort_unstable();
        for w in blocked.windows(2) {
            if w[0] == w[1] {
                return Err(RichardsonError::BadBlocked(w[0]));
            }
        }
        if let Some(&i) = blocked.last() {
            if i >= energies.len() {
                return Err(RichardsonError::BadBlocked(i));
            }
        }
        let free = energies.len() - blocked.len();
        if n_pairs > free {
            return Err(RichardsonError::TooManyPairs(n_pairs, free));
        }
        Ok(LevelSet {
            energies,
            blocked,
            n_pairs,
        })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn blocked(&self) -> &[usize] {
        &self.blocked
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn free_levels(&self) -> Vec<usize> {
        (0..self.energies.len())
            .filter(|i| self.blocked.binary_search(i).is_err())
            .collect()
    }

    /// Energy shift of the blocked levels.
    pub fn blocked_energy(&self) -> f64 {
        self.blocked.iter().map(|&i| self.energies[i]).sum()
    }
}

/// A converged solution at coupling `g`.
#[derive(Debug, Clone)]
pub struct RichardsonSolution {
    /// Pair rapidities in canonical order (ascending real part, then
    /// imaginary part); complex values occur in conjugate pairs.
    pub rapidities: Vec<Complex64>,
    pub g: f64,
    /// 'Max-abs residual of the original coupled equations at `rapidities`.
    pub residual_norm: f64,
    /// Accepted continuation checkpoints: `(g, rapidities)`.
    pub trace: Vec<(f64, Vec<Complex64>)>,
    pair_energy: f64,
}

impl RichardsonSolution {
    /// `sum_nu Re e_nu`, computed from the continuation variables.
    pub fn pair_energy(&self) -> f64 {
        self.pair_energy
    }
}

/// `E_B + sum_nu e_nu`.
pub fn total_energy(solution: &RichardsonSolution, levels: &LevelSet) -> f64 {
    levels.blocked_energy() + solution.pair_energy()
}

const NEWTON_TOL: f64 = 1e-13;
// roundoff in the quadratic system is amplified near critical couplings;
// a stalled iteration below this is still a converged point
const NEWTON_STALL_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 60;
const BRANCH_SUM_GUARD: f64 = 0.25;
// max change of any U component per accepted continuation step; larger
// moves are re-done in smaller steps so Newton cannot hop between nearby
// branches at avoided crossings
const STEP_CHANGE_GUARD: f64 = 0.25;
const RESIDUAL_BOUND: f64 = 1e-10;

struct USystem {
    /// `eta_k = 2 E_k` over free levels.
    eta: Vec<f64>,
    /// `1 / (eta_k - eta_j)` for j != k, row-major.
    inv_gaps: Vec<f64>,
    n_pairs: usize,
    /// smallest pole gap after degeneracy splitting; continuation steps
    /// are capped by it so crossovers are resolved, not hopped over
    min_gap: f64,
}

impl USystem {
    fn new(eta_raw: &[f64], n_pairs: usize) -> Self {
        // near-degenerate levels are split symmetrically: the linear terms
        // of the perturbation cancel, leaving an O(split^2) energy error,
        // while the pairwise gaps stay large enough for a well-conditioned
        // Jacobian
        let scale = eta_raw.iter().fold(1.0f64, |a, &e| a.max(e.abs()));
        let split = 1e-6 * scale;
        let mut eta = eta_raw.to_vec();
        let mut i = 0;
        while i < eta.len() {
            let mut j = i + 1;
            while j < eta.len() && eta[j] - eta[i] < split {
                j += 1;
            }
            let group = j - i;
            if group > 1 {
                let center: f64 = eta[i..j].iter().sum::<f64>() / group as f64;
                for (k, slot) in eta[i..j].iter_mut().enumerate() {
                    let offset = k as f64 - (group as f64 - 1.0) / 2.0;
                    *slot = center + offset * split;
                }
            }
            i = j;
        }
        let min_gap = eta
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
            .max(split);
        let l = eta.len();
        let mut inv_gaps = vec![0.0; l * l];
        for k in 0..l {
            for j in 0..l {
                if j != k {
                    inv_gaps[k * l + j] = 1.0 / (eta[k] - eta[j]);
                }
            }
        }
        USystem {
            eta,
            inv_gaps,
            n_pairs,
            min_gap,
        }
    }

    fn len(&self) -> usize {
        self.eta.len()
    }

    fn residual(&self, u: &[f64], g: f64, out: &mut [f64]) {
        let l = self.len();
        for k in 0..l {
            let mut coupling = 0.0;
            for j in 0..l {
                if j != k {
                    coupling += (u[j] - u[k]) * self.inv_gaps[k * l + j];
                }
            }
            out[k] = u[k] * u[k] - u[k] + g * coupling;
        }
    }

    fn jacobian(&self, u: &[f64], g: f64) -> DMatrix<f64> {
        let l = self.len();
        let mut jac = DMatrix::<f64>::zeros(l, l);
        for k in 0..l {
            let mut diag = 2.0 * u[k] - 1.0;
            for j in 0..l {
                if j != k {
                    let w = self.inv_gaps[k * l + j];
                    jac[(k, j)] = g * w;
                    diag -= g * w;
                }
            }
            jac[(k, k)] = diag;
        }
        jac
    }

    /// Damped Newton at fixed `g`. Returns false on non-convergence.
    fn newton(&self, u: &mut Vec<f64>, g: f64) -> Result<bool, RichardsonError> {
        let l = self.len();
        let mut r = vec![0.0; l];
        self.residual(u, g, &mut r);
        let mut rnorm = r.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        for _ in 0..NEWTON_MAX_ITER {
            if rnorm < NEWTON_TOL {
                return Ok(true);
            }
            let jac = self.jacobian(u, g);
            let rhs = DVector::from_iterator(l, r.iter().map(|&x| -x));
            let lu = jac.lu();
            let step = match lu.solve(&rhs) {
                Some(s) => s,
                None => return Err(RichardsonError::SingularJacobian(g)),
            };
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..6 {
                let trial: Vec<f64> = u
                    .iter()
                    .zip(step.iter())
                    .map(|(&x, &d)| x + lambda * d)
                    .collect();
                let mut rt = vec![0.0; l];
                self.residual(&trial, g, &mut rt);
                let tnorm = rt.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
                if tnorm < rnorm || tnorm < NEWTON_TOL {
                    *u = trial;
                    r = rt;
                    rnorm = tnorm;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Ok(rnorm < NEWTON_STALL_TOL);
            }
        }
        Ok(rnorm < NEWTON_STALL_TOL)
    }

    /// `sum_nu e_nu` from converged variables.
    fn pair_energy(&self, u: &[f64], g: f64) -> f64 {
        let l = self.len() as f64;
        let m = self.n_pairs as f64;
        let weighted: f64 = self.eta.iter().zip(u).map(|(&eta, &uk)| eta * uk).sum();
        weighted + g * m * (m - 1.0 - l)
    }
}

/// Chebyshev values `T_0..T_n` and derivatives at `z`.
fn chebyshev_row(z: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut t = vec![0.0; n + 1];
    let mut u = vec![0.0; n + 1];
    t[0] = 1.0;
    u[0] = 1.0;
    if n >= 1 {
        t[1] = z;
        u[1] = 2.0 * z;
    }
    for k in 2..=n {
        t[k] = 2.0 * z * t[k - 1] - t[k - 2];
        u[k] = 2.0 * z * u[k - 1] - u[k - 2];
    }
    // T_k' = k U_{k-1}
    let mut dt = vec![0.0; n + 1];
    for k in 1..=n {
        dt[k] = k as f64 * u[k - 1];
    }
    (t, dt)
}

/// One Chebyshev fit of the characteristic polynomial on the window
/// `[lo, hi]`: rows are `P'(eta_k) - Lambda_k P(eta_k) = 0` with the
/// leading coefficient pinned, equilibrated to unit row norm, solved by
/// SVD; roots come from the colleague matrix of the fitted series.
fn fit_characteristic_roots(
    system: &USystem,
    u: &[f64],
    g: f64,
    lo: f64,
    hi: f64,
) -> Vec<Complex64> {
    let m = system.n_pairs;
    let l = system.len();
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo).max(1e-12);
    let mut a = DMatrix::<f64>::zeros(l, m);
    let mut b = DVector::<f64>::zeros(l);
    for k in 0..l {
        let z = (system.eta[k] - mid) / half;
        let lam = u[k] / g * half;
        let (t, dt) = chebyshev_row(z, m);
        let mut row = vec![0.0; m + 1];
        for p in 0..=m {
            row[p] = dt[p] - lam * t[p];
        }
        // equilibrate: far-outside nodes otherwise dominate the fit
        let scale = row.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1e-300);
        for p in 0..m {
            a[(k, p)] = row[p] / scale;
        }
        b[k] = -row[m] / scale;
    }
    let coeffs = a
        .svd(true, true)
        .solve(&b, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(m));
    // colleague matrix: multiplication by z modulo P in the Chebyshev basis
    let mut comp = DMatrix::<f64>::zeros(m, m);
    if m == 1 {
        comp[(0, 0)] = -coeffs[0];
    } else {
        comp[(1, 0)] = 1.0;
        for col in 1..m - 1 {
            comp[(col - 1, col)] = 0.5;
            comp[(col + 1, col)] = 0.5;
        }
        comp[(m - 2, m - 1)] = 0.5;
        for row in 0..m {
            comp[(row, m - 1)] -= 0.5 * coeffs[row];
        }
    }
    let roots = comp.complex_eigenvalues();
    roots
        .iter()
        .map(|r| Complex64::new(r.re * half + mid, r.im * half))
        .collect()
}

/// Rapidities from the `Lambda` data: the characteristic polynomial `P`
/// satisfies `P'(eta_k) = Lambda_k P(eta_k)` at every free level. A fit
/// over the whole level range locates the root region; a second fit on
/// that window resolves root crowding. Both candidates are polished on
/// the original equations and the one with the smaller verified residual
/// wins (either fit alone can lose precision, in different regimes).
fn reconstruct_rapidities(system: &USystem, u: &[f64], g: f64) -> Vec<Complex64> {
    let m = system.n_pairs;
    if m == 0 {
        return Vec::new();
    }
    let l = system.len();
    let span = (system.eta[l - 1] - system.eta[0]).max(1e-9);
    let rough = fit_characteristic_roots(system, u, g, system.eta[0], system.eta[l - 1]);
    let r_lo = rough.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
    let r_hi = rough.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    if !r_lo.is_finite() || !r_hi.is_finite() {
        return rough;
    }
    let im_max = rough.iter().map(|e| e.im.abs()).fold(0.0f64, f64::max);
    let pad = 0.15 * (r_hi - r_lo) + 0.02 * span + im_max;
    let refined = fit_characteristic_roots(system, u, g, r_lo - pad, r_hi + pad);

    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for candidate in [refined, rough] {
        let mut polished = candidate;
        polish_rapidities(&mut polished, &system.eta, g);
        let norm = residual_norm(&polished, &system.eta, g);
        if best.as_ref().map_or(true, |(b, _)| norm < *b) {
            best = Some((norm, polished));
        }
        if best.as_ref().unwrap().0 < 1e-12 {
            break;
        }
    }
    best.unwrap().1
}

fn bare_residuals(rapidities: &[Complex64], eta: &[f64], g: f64) -> Vec<Complex64> {
    let m = rapidities.len();
    let mut out = Vec::with_capacity(m);
    for nu in 0..m {
        let e_nu = rapidities[nu];
        let mut r = Complex64::new(1.0, 0.0);
        for mu in 0..m {
            if mu != nu {
                r += 2.0 * g / (rapidities[mu] - e_nu);
            }
        }
        for &h in eta {
            r -= g / (Complex64::new(h, 0.0) - e_nu);
        }
        out.push(r);
    }
    out
}

fn residual_norm(rapidities: &[Complex64], eta: &[f64], g: f64) -> f64 {
    bare_residuals(rapidities, eta, g)
        .iter()
        .fold(0.0f64, |a, r| a.max(r.norm()))
}

/// Achievable floating-point residual: every term `g / (x - e)` carries a
/// relative error amplified by the cancellation in its denominator,
/// `(|x| + |e|) / |x - e|`.
fn residual_condition(rapidities: &[Complex64], eta: &[f64], g: f64) -> f64 {
    let mut worst = 1.0f64;
    for (nu, &e_nu) in rapidities.iter().enumerate() {
        let mut acc = 1.0;
        for (mu, &e_mu) in rapidities.iter().enumerate() {
            if mu != nu {
                let d = e_mu - e_nu;
                acc += (2.0 * g / d).norm() * (e_mu.norm() + e_nu.norm()).max(1.0) / d.norm();
            }
        }
        for &h in eta {
            let d = Complex64::new(h, 0.0) - e_nu;
            acc += (g / d).norm() * (h.abs() + e_nu.norm()).max(1.0) / d.norm();
        }
        worst = worst.max(acc);
    }
    worst
}

/// Complex Newton on the original equations starting from reconstructed
/// roots. Best effort: returns the improved rapidities.
fn polish_rapidities(rapidities: &mut Vec<Complex64>, eta: &[f64], g: f64) {
    let m = rapidities.len();
    if m == 0 {
        return;
    }
    let scale = eta.iter().fold(1.0f64, |a, &e| a.max(e.abs()));
    let mut norm = residual_norm(rapidities, eta, g);
    for _ in 0..24 {
        if norm < 1e-12 {
            break;
        }
        let r = bare_residuals(rapidities, eta, g);
        let mut jac = DMatrix::<Complex64>::zeros(m, m);
        for nu in 0..m {
            let e_nu = rapidities[nu];
            let mut diag = Complex64::new(0.0, 0.0);
            for mu in 0..m {
                if mu != nu {
                    let d = rapidities[mu] - e_nu;
                    let w = 2.0 * g / (d * d);
                    jac[(nu, mu)] = -w;
                    diag += w;
                }
            }
            for &h in eta {
                let d = Complex64::new(h, 0.0) - e_nu;
                diag -= g / (d * d);
            }
            jac[(nu, nu)] = diag;
        }
        let rhs = DVector::from_iterator(m, r.iter().map(|&x| -x));
        let step = match jac.lu().solve(&rhs) {
            Some(s) => s,
            None => break,
        };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..8 {
            let trial: Vec<Complex64> = rapidities
                .iter()
                .zip(step.iter())
                .map(|(&e, &d)| e + lambda * d)
                .collect();
            if trial.iter().all(|e| e.norm() < 100.0 * scale) {
                let tnorm = residual_norm(&trial, eta, g);
                if tnorm < norm {
                    *rapidities = trial;
                    norm = tnorm;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
}

/// Sort canonically and snap conjugate partners to exact conjugacy.
fn canonicalize(rapidities: &mut [Complex64]) {
    let tol = 1e-8;
    let n = rapidities.len();
    // zero out numerically-real imaginary parts
    let scale = rapidities.iter().fold(1.0f64, |a, e| a.max(e.norm()));
    for e in rapidities.iter_mut() {
        if e.im.abs() < 1e-10 * scale {
            e.im = 0.0;
        }
    }
    let mut used = vec![false; n];
    for i in 0..n {
        if used[i] || rapidities[i].im == 0.0 {
            continue;
        }
        let target = rapidities[i].conj();
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            if j != i && !used[j] && rapidities[j].im * rapidities[i].im < 0.0 {
                let d = (rapidities[j] - target).norm();
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        if let Some((j, d)) = best {
            if d < tol * scale {
                let re = 0.5 * (rapidities[i].re + rapidities[j].re);
                let im = 0.5 * (rapidities[i].im.abs() + rapidities[j].im.abs());
                let si = rapidities[i].im.signum();
                rapidities[i] = Complex64::new(re, si * im);
                rapidities[j] = Complex64::new(re, -si * im);
                used[i] = true;
                used[j] = true;
            }
        }
    }
    rapidities.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
}

/// Follow the branch seeded by pairs on `seed_occupation` from `g = 0` up
/// to the target coupling.
pub fn solve_richardson(
    levels: &LevelSet,
    g: f64,
    seed_occupation: &[usize],
) -> Result<RichardsonSolution, RichardsonError> {
    if g < 0.0 {
        return Err(RichardsonError::NegativeCoupling(g));
    }
    let free = levels.free_levels();
    let n_pairs = levels.n_pairs();
    if seed_occupation.len() != n_pairs {
        return Err(RichardsonError::BadSeed(format!(
            "{} seeds for {} pairs",
            seed_occupation.len(),
            n_pairs
        )));
    }
    let mut seen = vec![false; levels.energies().len()];
    for &s in seed_occupation {
        if s >= seen.len() || seen[s] {
            return Err(RichardsonError::BadSeed(format!("index {}", s)));
        }
        if levels.blocked().binary_search(&s).is_ok() {
            return Err(RichardsonError::BadSeed(format!("index {} is blocked", s)));
        }
        seen[s] = true;
    }

    let eta: Vec<f64> = free.iter().map(|&i| 2.0 * levels.energies()[i]).collect();
    let system = USystem::new(&eta, n_pairs);
    // seed indicator in free-level coordinates
    let mut u: Vec<f64> = free
        .iter()
        .map(|i| if seed_occupation.contains(i) { 1.0 } else { 0.0 })
        .collect();

    if n_pairs == 0 || g == 0.0 {
        let rapidities: Vec<Complex64> = seed_occupation
            .iter()
            .map(|&i| Complex64::new(2.0 * levels.energies()[i], 0.0))
            .collect();
        let pair_energy = rapidities.iter().map(|e| e.re).sum();
        return Ok(RichardsonSolution {
            rapidities,
            g,
            residual_norm: 0.0,
            trace: vec![(g, Vec::new())],
            pair_energy,
        });
    }

    let mut g_now = 0.0;
    // resolve every pole-gap crossover instead of hopping over it
    let step_cap = (0.5 * system.min_gap).min(g).max(1e-9 * g);
    let mut step = step_cap;
    let mut trace: Vec<(f64, Vec<Complex64>)> = Vec::new();
    let mut prev: Option<(f64, Vec<f64>)> = None;
    let mut successes = 0usize;
    while g_now < g {
        // beyond the crossover region the branch is smooth; allow steps
        // proportional to the coupling already covered
        let dynamic_cap = step_cap.max(0.5 * g_now);
        let g_next = (g_now + step.min(dynamic_cap)).min(g);
        // secant predictor
        let mut trial = u.clone();
        if let Some((g_prev, u_prev)) = &prev {
            let span = g_now - g_prev;
            if span > 0.0 {
                let w = (g_next - g_now) / span;
                for (t, (cur, old)) in trial.iter_mut().zip(u.iter().zip(u_prev)) {
                    *t = cur + (cur - old) * w;
                }
            }
        }
        let converged = system.newton(&mut trial, g_next)?;
        let sum: f64 = trial.iter().sum();
        let max_change = trial
            .iter()
            .zip(u.iter())
            .fold(0.0f64, |a, (&t, &c)| a.max((t - c).abs()));
        let on_branch =
            (sum - n_pairs as f64).abs() < BRANCH_SUM_GUARD && max_change <= STEP_CHANGE_GUARD;
        if converged && on_branch {
            prev = Some((g_now, u.clone()));
            u = trial;
            g_now = g_next;
            let snapshot = fit_characteristic_roots(
                &system,
                &u,
                g_now,
                system.eta[0],
                system.eta[system.eta.len() - 1],
            );
            trace.push((g_now, snapshot));
            successes += 1;
            if successes >= 2 {
                step = (step * 2.0).min(step_cap.max(0.5 * g_now));
                successes = 0;
            }
        } else {
            step *= 0.5;
            successes = 0;
            if step < 1e-12 * g.max(1.0) {
                let rapidities = trace.last().map(|(_, r)| r.clone()).unwrap_or_default();
                return Err(RichardsonError::ContinuationBreakdown {
                    last_g: g_now,
                    rapidities,
                });
            }
        }
    }

    let mut rapidities = reconstruct_rapidities(&system, &u, g);
    canonicalize(&mut rapidities);
    let norm = residual_norm(&rapidities, &system.eta, g);
    let noise_floor = 100.0 * f64::EPSILON * residual_condition(&rapidities, &system.eta, g);
    if norm > RESIDUAL_BOUND.max(noise_floor) {
        return Err(RichardsonError::NotConverged(norm));
    }
    let pair_energy = system.pair_energy(&u, g);
    // the polished roots and the continuation variables describe the same
    // state; a gross mismatch means the polish jumped branches
    let root_sum: f64 = rapidities.iter().map(|e| e.re).sum();
    if (root_sum - pair_energy).abs() > 1e-7 * pair_energy.abs().max(1.0) {
        return Err(RichardsonError::NotConverged((root_sum - pair_energy).abs()));
    }
    Ok(RichardsonSolution {
        rapidities,
        g,
        residual_norm: norm,
        trace,
        pair_energy,
    })
}

/// Minimal-energy state with `n_pairs` pairs and no blocked levels.
pub fn ground_energy(energies: &[f64], n_pairs: usize, g: f64) -> Result<f64, RichardsonError> {
    let levels = LevelSet::new(energies.to_vec(), Vec::new(), n_pairs)?;
    let seeds: Vec<usize> = (0..n_pairs).collect();
    let solution = solve_richardson(&levels, g, &seeds)?;
    Ok(total_energy(&solution, &levels))
}

fn blocked_ground_energy(
    energies: &[f64],
    blocked: &[usize],
    n_pairs: usize,
    g: f64,
) -> Result<f64, RichardsonError> {
    let levels = LevelSet::new(energies.to_vec(), blocked.to_vec(), n_pairs)?;
    let seeds: Vec<usize> = levels.free_levels().into_iter().take(n_pairs).collect();
    let solution = solve_richardson(&levels, g, &seeds)?;
    Ok(total_energy(&solution, &levels))
}

/// Spectroscopic gap `Delta(n_p, 0)`: energy to break one pair of the
/// `n_p`-pair ground state into two singly-occupied levels. The blocked
/// pair is chosen among the four levels nearest the uncorrelated Fermi
/// level by minimizing the total energy; ties break toward lower indices.
pub fn spectroscopic_gap(energies: &[f64], n_pairs: usize, g: f64) -> Result<f64, RichardsonError> {
    assert!(n_pairs >= 1, "gap needs at least one pair");
    let e0 = ground_energy(energies, n_pairs, g)?;
    let fermi = energies[n_pairs - 1];
    let mut order: Vec<usize> = (0..energies.len()).collect();
    order.sort_by(|&a, &b| {
        let da = (energies[a] - fermi).abs();
        let db = (energies[b] - fermi).abs();
        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
    });
    let window: Vec<usize> = order.into_iter().take(4.min(energies.len())).collect();
    let mut best: Option<(f64, (usize, usize))> = None;
    for ai in 0..window.len() {
        for bi in ai + 1..window.len() {
            let mut pair = [window[ai], window[bi]];
            pair.sort_unstable();
            let e = blocked_ground_energy(energies, &pair, n_pairs - 1, g)?;
            let better = match best {
                None => true,
                Some((be, bp)) => {
                    e < be - 1e-12 || ((e - be).abs() <= 1e-12 && (pair[0], pair[1]) < bp)
                }
            };
            if better {
                best = Some((e, (pair[0], pair[1])));
            }
        }
    }
    let (excited, _) = best.expect("at least one blocked pair");
    Ok(excited - e0)
}

/// Number of distinct eigenstates with `n_pairs` pairs among
/// `n_levels - blocked` available levels: `C(n_levels - blocked, n_pairs)`,
/// exact, with overflow detection.
pub fn count_states(n_levels: usize, blocked: usize, n_pairs: usize) -> Result<u128, RichardsonError> {
    let avail = n_levels
        .checked_sub(blocked)
        .ok_or(RichardsonError::CountOverflow(n_levels, n_pairs))?;
    if n_pairs > avail {
        return Ok(0);
    }
    let k = n_pairs.min(avail - n_pairs);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc
            .checked_mul((avail - i) as u128)
            .ok_or(RichardsonError::CountOverflow(avail, n_pairs))?
            / (i + 1) as u128;
    }
    Ok(acc)
}

/// One row of a spectroscopic-gap sweep over side-site positions.
#[derive(Debug, Clone, Copy)]
pub struct GapRow {
    pub attach_pos: usize,
    pub n_pairs: usize,
    pub g: f64,
    pub gap: f64,
    /// `max_n gap(n) / gap(plain chain)` for this `(n_pairs, g)` group.
    pub enhancement: f64,
}

/// A sweep result; points that failed to converge are reported separately
/// so one bad point cannot void a curve.
#[derive(Debug, Clone)]
pub struct GapSweep {
    pub rows: Vec<GapRow>,
    pub failures: Vec<(usize, usize, f64, String)>,
}

/// Gap `Delta(n_p, 0)` for every side-site position of the fixed-size
/// chain family, for each `(n_pairs, g)` in the lists, with the
/// enhancement over the plain chain of equal size.
pub fn gap_sweep(
    total_sites: usize,
    side_sites: usize,
    n_pairs_list: &[usize],
    g_list: &[f64],
) -> Result<GapSweep, RichardsonError> {
    let backbone = total_sites - side_sites;
    let chain = QuantumGraph::chain(&ChainSpec::chain(total_sites))?;
    let chain_levels = graph_spectrum(&chain)?.energies().to_vec();

    let mut grid = Vec::new();
    for &np in n_pairs_list {
        for &g in g_list {
            for n in 1..=backbone {
                grid.push((np, g, n));
            }
        }
    }
    let computed: Vec<(usize, f64, usize, Result<f64, String>)> = grid
        .par_iter()
        .map(|&(np, g, n)| {
            let result = (|| -> Result<f64, RichardsonError> {
                let spec = ChainSpec {
                    total_sites,
                    side_sites,
                    attach_pos: Some(n),
                    boundary: Boundary::Open,
                };
                let graph = QuantumGraph::chain(&spec)?;
                let levels = graph_spectrum(&graph)?.energies().to_vec();
                spectroscopic_gap(&levels, np, g)
            })();
            (np, g, n, result.map_err(|e| e.to_string()))
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &np in n_pairs_list {
        for &g in g_list {
            let reference = spectroscopic_gap(&chain_levels, np, g)?;
            let group: Vec<&(usize, f64, usize, Result<f64, String>)> = computed
                .iter()
                .filter(|(cnp, cg, _, _)| *cnp == np && *cg == g)
                .collect();
            let max_gap = group
                .iter()
                .filter_map(|(_, _, _, r)| r.as_ref().ok())
                .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let enhancement = max_gap / reference;
            for (cnp, cg, n, r) in group {
                match r {
                    Ok(gap) => rows.push(GapRow {
                        attach_pos: *n,
                        n_pairs: *cnp,
                        g: *cg,
                        gap: *gap,
                        enhancement,
                    }),
                    Err(msg) => failures.push((*n, *cnp, *cg, msg.clone())),
                }
            }
        }
    }
    Ok(GapSweep { rows, failures })
}
