//! Simulation and analysis of the six-photon state Ψ6+.
//!
//! The crate derives Ψ6+ from the third-order term of a type-II
//! down-conversion source split into six spatial modes, then provides the
//! analysis layer that goes with it:
//!
//! * [`fock`]: bosonic creation-operator polynomials, the emission expansion
//!   and post-selection onto one photon per spatial mode.
//! * [`optics`]: beam-splitter networks (built in code or loaded from JSON)
//!   and wave-plate polarization analyzers.
//! * [`qstate`]: dense n-qubit kets and density operators, reference states,
//!   white noise, outcome distributions, correlations and fidelity.
//! * [`witness`]: Pauli decomposition, maximum-overlap and reduced witnesses,
//!   and the correlation-tensor norm indicator.
//! * [`teleclone`]: qubit-level 1→3 telecloning over Ψ6+.
//! * [`montecarlo`]: seeded sixfold-coincidence sampling and estimators.
//!
//! Qubit order is always (a, b, c, d, e, f); qubit 0 is the most significant
//! bit of a basis index and `H` is bit value 0.

pub mod error;
pub mod fock;
pub mod montecarlo;
pub mod optics;
pub mod qstate;
pub mod teleclone;
pub mod witness;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Amplitudes smaller than this fraction of the largest one are dropped
/// when collecting terms after a network.
pub const COLLECT_TOL: f64 = 1e-12;
