//! Symmetry-partitioned second-order perturbation theory for small molecules.
//!
//! The Hamiltonian is split by a set of Z2 parity operators into a
//! symmetry-preserving reference part and blocks that shift the irrep label.
//! The reference part is diagonalized inside one sector; the blocks drive
//! uncontracted, strongly contracted and Epstein–Nesbet second-order
//! corrections, a selected-CI variant, and qubit tapering counts.

pub mod driver;
pub mod eigensolver;
pub mod error;
pub mod hamiltonian;
pub mod integrals;
pub mod qubitmap;
pub mod sbpt;
pub mod sci;
pub mod symmetry;

pub use error::{Error, Result};
