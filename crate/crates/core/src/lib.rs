//! Lagged dynamic mode decomposition with entropic-regression lag selection.
//!
//! The crate is organized around four pieces:
//!
//! - [`dmd`]: fitting, iterating and spectrally analyzing linear models
//!   `y_{j+1} = Σ K_l y_{j+1-l}` over arbitrary, non-uniform lag sets.
//! - [`info`]: k-nearest-neighbor (KSG) estimators of mutual and conditional
//!   mutual information plus permutation significance tests.
//! - [`selection`]: the greedy build/prune loop that picks a sparse lag set
//!   by conditional information gain.
//! - [`systems`]: deterministic data generators (Lorenz-63, Rössler,
//!   Kuramoto–Sivashinsky) and POD reduction.
//!
//! Data-parallel inner loops run on rayon when the `parallel` feature is on
//! (the default); every parallel map has a sequential twin selected through
//! [`Execution`], and both produce identical results.

pub mod dmd;
pub mod error;
pub mod exec;
pub mod info;
pub mod selection;
pub mod series;
pub mod systems;

pub use error::{Error, Result};
pub use exec::Execution;
pub use num_complex::Complex64;
pub use series::TimeSeries;
