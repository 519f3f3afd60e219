//! Entanglement transport through an open Heisenberg-XY spin chain.
//!
//! - [`magnon`]: closed-form one-magnon propagator on the open chain.
//! - [`rdm`]: two-qubit reduced density matrices, analytic and by partial trace.
//! - [`measures`]: impurity, entropy, concurrence, correlators and
//!   localizable-entanglement bounds.
//! - [`oracle`]: exact diagonalization of the full Hamiltonian for cross-checks.
//! - [`runner`]: time series, spatial profiles, heatmaps and front tracking.

pub mod config;
pub mod error;
pub mod magnon;
pub mod measures;
pub mod oracle;
pub mod rdm;
pub mod runner;

pub use error::{Error, Result};
