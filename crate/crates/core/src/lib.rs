//! Spectral gaps and reflection-induced localized edge modes in one-dimensional
//! media built by recursive tiling rules (Fibonacci, periodic, user-defined).
//!
//! The toolkit has three layers:
//!
//! * exact 2x2 transfer-matrix algebra ([`transfer`]) and tiling-rule
//!   expansion into piecewise-constant material profiles ([`tiling`]);
//! * the Kohmoto trace recursion with a doubling certificate for spectral
//!   gaps ([`spectrum`]) and eigenvector-alignment root finding for edge
//!   modes with decay-rate estimates ([`edgemode`]);
//! * a finite-difference eigensolver for finite reflected structures
//!   ([`discretize`]) and randomized disorder sweeps ([`robustness`]).
//!
//! Grid sweeps, eigenvalue searches and disorder trials are data-parallel
//! via rayon when the default `parallel` feature is enabled; disabling it
//! yields a dependency-free sequential build with identical results.

pub mod discretize;
pub mod edgemode;
mod error;
pub mod exec;
pub mod io;
pub mod robustness;
pub mod spectrum;
pub mod tiling;
pub mod transfer;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
