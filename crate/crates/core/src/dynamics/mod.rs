//! Ground states, exact and Krylov time evolution, and expectation values.

mod eigen;
mod evolution;
mod krylov;
mod state;

pub use eigen::{ground_state, spectrum, Eigensystem, SpectralData, DEGENERACY_TOL, MAX_DENSE_QUBITS};
pub use evolution::{
    evolve_protocol, expectation, propagate, BackendKind, PropagatorBackend, ProtocolEvolution, ProtocolTrace,
    SpectralSampler, STATE_MEMORY_BUDGET,
};
pub use krylov::krylov_expm_apply;
pub use state::StateVector;
