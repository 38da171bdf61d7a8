//! Numerical library for real-space BCS pairing on quantum graphs.
//!
//! The pipeline goes: build a graph topology ([`graph`]), diagonalize its
//! single-particle Hamiltonian ([`spectral`]), then either solve the
//! two-particle eigenproblem with a Hubbard or fully nonlocal pairing
//! interaction ([`twobody`]), or treat many pairs through the Richardson
//! equations ([`richardson`]) and exact diagonalization of the reduced
//! pairing model ([`manybody`]). Closed-form translational-invariant
//! results used as oracles and limits live in [`analytic`].
//!
//! All energies are expressed in units of the hopping constant `K`.

pub mod analytic;
pub mod graph;
pub mod manybody;
pub mod richardson;
pub mod spectral;
pub mod twobody;

pub use graph::{Boundary, ChainSpec, DistanceMatrix, GraphError, QuantumGraph};
pub use twobody::{Interaction, InteractionKind, TwoBodyError, TwoBodyProblem, TwoBodySolution};
pub use spectral::{
    eigendecompose_symmetric, single_particle_hamiltonian, verify_unitary_reduction,
    SingleParticleSpectrum, SpectralError,
};
