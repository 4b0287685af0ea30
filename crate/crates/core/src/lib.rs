//! A 1+1D lattice Dirac-field laboratory for static gauge changes and the
//! free-field energy of Gaussian fermionic states.

pub mod config;
pub mod counterexample;
pub mod error;
pub mod gauge;
pub mod lattice;
pub mod linalg;
pub mod recipe;
pub mod report;
pub mod run;
pub mod state;
pub mod verify;

pub use error::{LabError, Result};
