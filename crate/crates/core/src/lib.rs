//! Numerical certification of symplectic-Haantjes geometry for Hamiltonian
//! systems in magnetic fields.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod exprlang;
pub mod geometry;
pub mod hamiltonian;
pub mod numcore;
pub mod phasespace;
pub mod models;
pub mod stackel;

pub use error::{Error, Result};
