//! Desk-scale numerics for time changes of bounded-type skew-shift
//! suspensions on the 2-torus: continued fractions and extended-precision
//! phase reduction, the skew-shift with exact closed-form iterates, finite
//! Fourier observables, Birkhoff-sum engines and growth fits, the spectral
//! cohomological-equation solver, special flows, and finite-window drift
//! searches.

pub mod arith;
pub mod birkhoff;
pub mod cli;
pub mod cohomology;
pub mod error;
pub mod experiments;
pub mod observables;
pub mod precision;
pub mod specialflow;
pub mod torus;

pub use error::{Error, Result};

/// Library version embedded into every emitted report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Report schema version; golden-file tests pin the serialized shapes.
pub const SCHEMA_VERSION: u32 = 1;
