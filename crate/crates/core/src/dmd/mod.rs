//! Lagged DMD models `y_{j+1} = Σ_k K_{l_k} y_{j+1-l_k}` over arbitrary lag sets.

mod lags;
mod model;
mod regression;
pub mod spectrum;

pub use lags::LagSet;
pub use model::LaggedModel;
pub use regression::{build_regression, fit, fit_min_norm, RegressionBlocks, DEFAULT_REL_SVD_TOL};
pub use spectrum::{
    char_poly_scale, companion_matrix, eval_char_poly, full_spectrum, matrix_poly_roots, nth_roots,
    reduced_inner, reduced_outer, PolyTerm, SpectrumResult, SpectrumSource, MAX_DENSE_EIGEN_DIM,
};
