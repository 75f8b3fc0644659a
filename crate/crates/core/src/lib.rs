//! Exact simulation of spin-chain quantum batteries charged under a tunable
//! suppression `λ` of the battery Hamiltonian.
//!
//! ```
//! use qbat::hamiltonians::{HamiltonianSpec, ProtocolSpec};
//! use qbat::metrics::{stored_energy_series, TimeGrid};
//! use qbat::dynamics::PropagatorBackend;
//!
//! let p = ProtocolSpec::new(HamiltonianSpec::field_z(1.0), HamiltonianSpec::ising_ata(1.0), 4)
//!     .with_lambda(1.0);
//! let grid = TimeGrid::new(5.0, 0.5, 1).unwrap();
//! let ts = stored_energy_series(&p, &grid, &PropagatorBackend::dense()).unwrap();
//! assert_eq!(ts.delta_e[0], 0.0);
//! ```

pub mod dynamics;
pub mod error;
pub mod hamiltonians;
pub mod metrics;
pub mod oracle;
pub mod qubit_ops;
pub mod runner;

pub use error::{Error, Result};
