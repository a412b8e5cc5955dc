//! Quantum-state transfer through the zero-energy flat band of a disordered
//! diamond spin chain.
//!
//! Everything here is pure numerics over `alloc`: building single-excitation
//! Hamiltonians, dense symmetric eigendecomposition, flat-band projector
//! observables, the two-hub star effective model, spectral time evolution and
//! ensemble statistics. File formats, the parallel runner and the CLI live in
//! the `flatqst` crate.
//!
//! Energies are in units of the base coupling `J` and times in units of `1/J`.
#![no_std]
// `!(x > 0.0)` style comparisons are there to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dynamics;
pub mod effective;
pub mod error;
pub mod flatband;
pub mod lattice;
pub mod matrix;
pub mod realization;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;
