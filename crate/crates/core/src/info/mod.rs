//! k-nearest-neighbor information estimators and permutation tests.
//!
//! All quantities are in nats. Samples are rows of a [`SampleCloud`]; for
//! time series, time columns become samples and state dimensions become
//! coordinates.

mod cloud;
mod ksg;
mod significance;

pub use cloud::SampleCloud;
pub use ksg::{
    conditional_mutual_information, mutual_information, KsgEstimator, Permutation, DEFAULT_K,
};
pub use significance::{shuffle_quantile_index, shuffle_significance, SignificanceResult};
