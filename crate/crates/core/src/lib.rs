//! Energy transport in 3D scalar harmonic lattices with acoustic dispersion.

// parameter checks are written `!(x > 0.0)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
pub mod error;
pub mod fft;
pub mod harness;
pub mod lattice;
pub mod multiscale;
pub mod transport;
pub mod wigner;

pub use error::{Error, Result};
