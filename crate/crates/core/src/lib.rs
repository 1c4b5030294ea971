//! Numerical certification of light-cone bounds for lattice Schrödinger and
//! Heisenberg dynamics.
//!
//! The crate computes velocity constants from a dispersion relation, builds
//! finite-box Hamiltonians, propagates states and observables, and checks the
//! measured leakage, commutator and OTOC values against analytic envelopes.
//!
//! ```
//! use lightcone::dispersion::{velocity_constant, DispersionRelation, VelocityOptions};
//!
//! let chain = DispersionRelation::nearest_neighbor_chain();
//! let c = velocity_constant(&chain, 1.0, &VelocityOptions::default()).unwrap();
//! assert!((c.c - 2.0 * 1f64.sinh()).abs() < 1e-8);
//! ```

pub mod certify;
pub mod dispersion;
pub mod error;
pub mod evolve;
pub mod exec;
pub mod lattice;
pub mod linalg;
pub mod report;

pub use certify::{
    certify_lca, certify_lrb, certify_mvb, certify_nbody, certify_otoc, certify_power_mvb, certify_state_lightcone,
    CertificationConfig, NBodyOptions, PowerLawOptions,
};
pub use dispersion::{DispersionRelation, Symbol, VelocityOptions};
pub use error::{LightconeError, Result};
pub use evolve::{DensityOperator, Observable, PropagationMethod, Propagator};
pub use exec::Execution;
pub use lattice::{LatticeBox, LatticeHamiltonian, Potential, Region};
pub use report::{CertificationReport, RowStatus, Theorem, Verdict};
