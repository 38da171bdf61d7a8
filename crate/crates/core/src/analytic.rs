//! Closed-form results for the translational-invariant two-body problem,
//! used as oracles and limits for the lattice numerics.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("center-of-mass parameter {0} outside (-pi/2, pi/2)")]
    MomentumOutOfRange(f64),
    #[error("coupling must be nonnegative, got {0}")]
    NegativeCoupling(f64),
    #[error("effective coupling must be positive, got {0}")]
    NonPositiveCoupling(f64),
    #[error("hopping must be positive, got {0}")]
    NonPositiveHopping(f64),
}

/// One point of the Hubbard pair band: energy and the exponential decay
/// factor of the relative wavefunction `f(z) = rho^|z|`.
///
/// `at_free_limit` flags the `g = 0` boundary where `rho = 1` and the pair
/// is no longer bound; it is returned as a limit value so sweeps can plot
/// continuous curves.
#[derive(Debug, Clone, Copy)]
pub struct PairBandPoint {
    pub p: f64,
    pub energy: f64,
    pub rho: f64,
    pub at_free_limit: bool,
}

/// Hubbard pair dispersion `E_p = -sqrt(g^2 + 16 K^2 cos^2 p)` with decay
/// `rho = sqrt((|E_p| - g)/(|E_p| + g))`.
pub fn hubbard_pair_band(p: f64, g: f64, hopping: f64) -> Result<PairBandPoint, AnalyticError> {
    use std::f64::consts::FRAC_PI_2;
    if !(hopping > 0.0) {
        return Err(AnalyticError::NonPositiveHopping(hopping));
    }
    if g < 0.0 {
        return Err(AnalyticError::NegativeCoupling(g));
    }
    if p.abs() >= FRAC_PI_2 {
        return Err(AnalyticError::MomentumOutOfRange(p));
    }
    let energy = -(g * g + 16.0 * hopping * hopping * p.cos().powi(2)).sqrt();
    let rho = ((energy.abs() - g) / (energy.abs() + g)).sqrt();
    Ok(PairBandPoint {
        p,
        energy,
        rho,
        at_free_limit: g == 0.0,
    })
}

/// Bound-state energy and decay factor of the nonlocal pairing interaction
/// on a ring at effective coupling `G = g N`:
/// `E_0 = -sqrt(G^2 + 16 K^2)`.
pub fn bcs_bound_state(g_eff: f64, hopping: f64) -> Result<(f64, f64), AnalyticError> {
    if !(hopping > 0.0) {
        return Err(AnalyticError::NonPositiveHopping(hopping));
    }
    if g_eff <= 0.0 {
        return Err(AnalyticError::NonPositiveCoupling(g_eff));
    }
    let e0 = -(g_eff * g_eff + 16.0 * hopping * hopping).sqrt();
    let rho = ((e0.abs() - g_eff) / (e0.abs() + g_eff)).sqrt();
    Ok((e0, rho))
}

/// Thermodynamic-limit depairing energy `sqrt(G^2 + 16 K^2) - 4K`.
pub fn bcs_depairing_thermodynamic(g_eff: f64, hopping: f64) -> Result<f64, AnalyticError> {
    if !(hopping > 0.0) {
        return Err(AnalyticError::NonPositiveHopping(hopping));
    }
    if g_eff < 0.0 {
        return Err(AnalyticError::NegativeCoupling(g_eff));
    }
    Ok((g_eff * g_eff + 16.0 * hopping * hopping).sqrt() - 4.0 * hopping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Residual of the relative-coordinate recursion
    /// `-2K cos(p) [f(z-1) + f(z+1)] - g delta_z0 f(z) = E f(z)`
    /// with `f(z) = rho^|z|`.
    fn recursion_residual(point: &PairBandPoint, g: f64, hopping: f64, z: i32) -> f64 {
        let f = |z: i32| point.rho.powi(z.abs());
        let lhs = -2.0 * hopping * point.p.cos() * (f(z - 1) + f(z + 1))
            - if z == 0 { g * f(0) } else { 0.0 };
        lhs - point.energy * f(z)
    }

    #[test]
    fn free_limit_is_flagged() {
        let pt = hubbard_pair_band(0.0, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(pt.energy, -4.0, epsilon = 1e-15);
        assert_eq!(pt.rho, 1.0);
        assert!(pt.at_free_limit);
    }

    #[test]
    fn strong_hubbard_point() {
        // p = 0, g = 3K: E = -5, rho = sqrt(2/8) = 0.5
        let pt = hubbard_pair_band(0.0, 3.0, 1.0).unwrap();
        assert_abs_diff_eq!(pt.energy, -5.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pt.rho, 0.5, epsilon = 1e-14);
        for z in 0..=2 {
            assert_abs_diff_eq!(recursion_residual(&pt, 3.0, 1.0, z), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn recursion_holds_on_a_sample_grid() {
        for &p in &[0.0, 0.3, 1.0, 1.4] {
            for &g in &[0.05, 0.5, 2.0, 4.0] {
                let pt = hubbard_pair_band(p, g, 1.0).unwrap();
                for z in 0..=2 {
                    assert_abs_diff_eq!(recursion_residual(&pt, g, 1.0, z), 0.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn band_edges_reject() {
        assert!(hubbard_pair_band(std::f64::consts::FRAC_PI_2, 1.0, 1.0).is_err());
        assert!(hubbard_pair_band(0.0, -0.1, 1.0).is_err());
        assert!(hubbard_pair_band(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn band_separates_from_continuum_beyond_4k() {
        // band top -g vs continuum bottom -4K: overlap iff g < 4K
        let top = |g: f64| -g;
        assert!(top(3.9) > -4.0);
        assert!(top(4.1) < -4.0);
        // and the band bottom at g = 4K
        let pt = hubbard_pair_band(0.0, 4.0, 1.0).unwrap();
        assert_abs_diff_eq!(pt.energy, -(32.0f64).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn bound_state_reference_values() {
        let (e0, rho) = bcs_bound_state(2.0, 1.0).unwrap();
        assert_abs_diff_eq!(e0, -(20.0f64).sqrt(), epsilon = 1e-14);
        let expect = ((20.0f64.sqrt() - 2.0) / (20.0f64.sqrt() + 2.0)).sqrt();
        assert_abs_diff_eq!(rho, expect, epsilon = 1e-14);
        assert_abs_diff_eq!(rho, 0.618034, epsilon = 1e-6);
    }

    #[test]
    fn bound_state_limits() {
        // G -> infinity: E0 -> -G, rho -> 0
        let (e0, rho) = bcs_bound_state(1e8, 1.0).unwrap();
        assert_abs_diff_eq!(e0 / -1e8, 1.0, epsilon = 1e-9);
        assert!(rho < 1e-3);
        // G -> 0+: E0 -> -4K
        let (e0, _) = bcs_bound_state(1e-9, 1.0).unwrap();
        assert_abs_diff_eq!(e0, -4.0, epsilon = 1e-9);
        assert!(bcs_bound_state(0.0, 1.0).is_err());
        assert!(bcs_bound_state(-1.0, 1.0).is_err());
    }

    #[test]
    fn depairing_values_and_monotonicity() {
        assert_eq!(bcs_depairing_thermodynamic(0.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            bcs_depairing_thermodynamic(2.0, 1.0).unwrap(),
            20.0f64.sqrt() - 4.0,
            epsilon = 1e-14
        );
        let mut prev = -1.0;
        for k in 0..100 {
            let g = k as f64 * 0.05;
            let d = bcs_depairing_thermodynamic(g, 1.0).unwrap();
            assert!(d >= prev);
            prev = d;
        }
        // E0(G) strictly decreasing
        let mut prev = 0.0;
        for k in 1..100 {
            let (e0, _) = bcs_bound_state(k as f64 * 0.05, 1.0).unwrap();
            assert!(e0 < prev);
            prev = e0;
        }
    }
}
