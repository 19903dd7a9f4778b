//! Simulation and schedule compilation for fast all-to-all Hamiltonian
//! protocols on data qubits coupled to a collective ancilla register.

pub mod error;
pub mod exec;
pub mod fidelity;
pub mod hamiltonian;
pub mod linalg;
pub mod oracle;
pub mod propagate;
pub mod protocols;
pub mod spaces;

pub use error::{Error, Result};
