//! Numerical workbench for the free Jacobi process: exact combinatorics,
//! moment hierarchies, generating-function identities, spectral densities
//! and a unitary random-matrix oracle.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod generating;
pub mod moments;
pub mod ode;
pub mod oracle;
pub mod series;
pub mod special;
pub mod spectral;
pub mod stationary;
pub mod verify;

pub use error::{Error, Result};

/// Version of this library.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
