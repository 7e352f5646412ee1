//! Pure algorithms behind the `lflow` experiment: Cremona-style curve
//! catalogs, Dirichlet coefficients of elliptic-curve L-series, escape-time
//! dynamics of complex maps, the formal-group nonic polynomial, and the rank
//! statistics used to compare escape rates with truncated values at `s = 1`.
//!
//! The crate is `no_std` and only needs `alloc`. Every transcendental function
//! goes through `libm`, so floating-point results do not depend on the host's
//! math library.
#![no_std]

extern crate alloc;

pub mod arith;
pub mod catalog;
pub mod dynamics;
pub mod formal;
pub mod lseries;
pub mod rng;
pub mod stats;

pub use num_complex::Complex64;
