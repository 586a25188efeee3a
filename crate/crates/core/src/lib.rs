//! Effective spin-ring models for honeycomb chromium tri-halide magnons.
//!
//! The crate covers the full model-to-spectrum path:
//!
//! * [`lattice`]: honeycomb geometry, the supercell ring and wave-vector twists.
//! * [`spin_algebra`]: spin operators, quartet projection, two-level truncation
//!   and bond-coupling extraction.
//! * [`hamiltonian`]: microscopic and effective ring Hamiltonians, the
//!   one-magnon band and Trotter-error estimates.
//! * [`propagators`]: Krylov and dense exact time evolution.
//! * [`circuits`]: Trotter circuit compilation to single-qubit rotations and CZ,
//!   Pauli twirling and readout-flip instrumentation.
//! * [`simulator`]: statevector and noisy trajectory backends, the density-matrix
//!   oracle and mitigated estimators.
//! * [`spectra`]: signal assembly, Fourier spectra, bootstrap bands and
//!   similarity scoring.
//!
//! Energies are in meV and times in meV⁻¹ (ħ = 1).

pub mod circuits;
pub mod error;
pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub mod propagators;
pub mod simulator;
pub mod spectra;
pub mod spin_algebra;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
