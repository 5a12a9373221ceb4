//! Config-driven experiment runner for entropic-regression lagged DMD.
//!
//! A run directory collects every artifact of one experiment: the analyzed
//! series, the selected model and its trace, closed-loop errors, spectra
//! and a deterministic `summary.json`.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod svg;

pub use commands::{pipeline, RunSummary};
pub use config::{ExperimentConfig, Format};
pub use error::{CliError, Result};
