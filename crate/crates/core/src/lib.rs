//! Engines for an ensemble of two-level atoms coupled to a thermally
//! occupied cavity mode: an exact Lindblad solver for a handful of atoms,
//! closed cumulant equations for large ensembles, and frequency-domain
//! spectra from the quantum regression theorem.

pub mod cumulant;
pub mod exact;
pub mod ode;
pub mod params;
pub mod spectra;

pub use num_complex::Complex64 as C64;
pub use params::{Detunings, SystemParams, ValidParams};
