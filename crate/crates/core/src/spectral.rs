//! Single-particle Hamiltonian assembly and the dense symmetric
//! eigendecomposition contract shared by every other module.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::QuantumGraph;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix is not symmetric: max asymmetry {0:.3e}")]
    NotSymmetric(f64),
    #[error("matrix is empty")]
    Empty,
    #[error("spectrum invariant violated: {0}")]
    InvariantViolated(String),
}

/// Ordered single-particle levels with their orthonormal eigenbasis.
/// Column `i` of `basis` is the eigenvector of `energies[i]`.
#[derive(Debug, Clone)]
pub struct SingleParticleSpectrum {
    energies: Vec<f64>,
    basis: DMatrix<f64>,
}

impl SingleParticleSpectrum {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Check the defining invariants against the originating Hamiltonian:
    /// orthonormality of the basis to 1e-10 and the eigen-residual
    /// `h U - U diag(E)` to 1e-9 relative to the largest level.
    pub fn validate(&self, h: &DMatrix<f64>) -> Result<(), SpectralError> {
        let n = self.energies.len();
        let gram = self.basis.transpose() * &self.basis;
        let eye = DMatrix::<f64>::identity(n, n);
        let ortho = (gram - eye).amax();
        if ortho > 1e-10 {
            return Err(SpectralError::InvariantViolated(format!(
                "basis orthonormality defect {:.3e}",
                ortho
            )));
        }
        let scale = self.energies.iter().fold(0.0f64, |a, &e| a.max(e.abs()));
        let lambda = DMatrix::from_diagonal(&DVector::from_row_slice(&self.energies));
        let resid = (h * &self.basis - &self.basis * lambda).amax();
        if resid > 1e-9 * scale.max(1.0) {
            return Err(SpectralError::InvariantViolated(format!(
                "eigen residual {:.3e}",
                resid
            )));
        }
        if self.energies.windows(2).any(|w| w[1] < w[0]) {
            return Err(SpectralError::InvariantViolated(
                "energies not ascending".into(),
            ));
        }
        Ok(())
    }
}

/// `h_ij = eps_i delta_ij - K A_ij`.
pub fn single_particle_hamiltonian(g: &QuantumGraph) -> DMatrix<f64> {
    let n = g.n_sites();
    let k = g.hopping();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = g.onsite()[i];
        for &j in g.neighbors(i) {
            h[(i, j)] = -k;
        }
    }
    h
}

/// Full spectrum of a real symmetric matrix, sorted ascending, with a
/// deterministic sign convention: the first component of each eigenvector
/// that is nonzero (above 1e-12 of the column max) is made positive.
pub fn eigendecompose_symmetric(h: &DMatrix<f64>) -> Result<SingleParticleSpectrum, SpectralError> {
    let n = h.nrows();
    if n == 0 {
        return Err(SpectralError::Empty);
    }
    let scale = h.amax().max(1.0);
    let asym = (h - h.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(SpectralError::NotSymmetric(asym));
    }
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut energies = Vec::with_capacity(n);
    let mut basis = DMatrix::<f64>::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        energies.push(eig.eigenvalues[src]);
        let mut v = eig.eigenvectors.column(src).clone_owned();
        let vmax = v.amax();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * vmax) {
            if *first < 0.0 {
                v.neg_mut();
            }
        }
        basis.set_column(col, &v);
    }
    Ok(SingleParticleSpectrum { energies, basis })
}

/// Verify `V_ij = sum_k U_ki U_kj = delta_ij` to 1e-10, the identity that
/// collapses the transformed pairing interaction to the reduced model.
pub fn verify_unitary_reduction(spectrum: &SingleParticleSpectrum) -> bool {
    let u = spectrum.basis();
    let n = u.nrows();
    let v = u.transpose() * u;
    (v - DMatrix::<f64>::identity(n, n)).amax() <= 1e-10
}

/// Spectrum of the graph Hamiltonian, ascending.
pub fn graph_spectrum(g: &QuantumGraph) -> Result<SingleParticleSpectrum, SpectralError> {
    eigendecompose_symmetric(&single_particle_hamiltonian(g))
}
