//! Exact second-quantized simulation of many-particle interference.
//!
//! The crate is organised bottom-up: [`fock`] provides bases and states,
//! [`matrix`] the permanent and determinant kernels, [`interference`] linear
//! mode networks, [`distinguish`] partial distinguishability and phase noise,
//! [`hubbard`] interacting lattice dynamics, [`entanglement`] particle and
//! mode entanglement diagnostics, and [`scenario`] the declarative runner used
//! by the `fock-interfere` binary.

pub mod bessel;
pub mod distinguish;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod hubbard;
pub mod interference;
pub mod matrix;
pub mod scenario;

pub use error::{Error, Result};
pub use fock::{enumerate_basis, DensityMatrix, FockBasis, FockStateVector, OccupationVector, Statistics};
pub use interference::{ModeUnitary, OutputDistribution};

pub type C64 = num_complex::Complex64;
