use faer::Mat;

use super::{LagSet, LaggedModel};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Singular values below this fraction of the largest are discarded.
pub const DEFAULT_REL_SVD_TOL: f64 = 1e-10;

/// Aligned target/regressor blocks for a lagged least-squares fit.
///
/// Column `j` of `targets` is `y_{m+j}`. The regressor matrix stacks one
/// `s`-row block per lag, highest lag first: block `k` at column `j` is
/// `y_{m+j-l}` where `l` is the `k`-th largest lag.
#[derive(Debug, Clone)]
pub struct RegressionBlocks {
    pub targets: Mat<f64>,
    pub regressors: Mat<f64>,
    pub target_start: usize,
}

impl RegressionBlocks {
    pub fn n_samples(&self) -> usize {
        self.targets.ncols()
    }
}

pub fn build_regression(
    ts: &TimeSeries,
    lags: &LagSet,
    target_start: usize,
) -> Result<RegressionBlocks> {
    if ts.is_empty() {
        return Err(Error::Dimension("empty time series".into()));
    }
    let last = ts.last_index();
    if target_start < lags.max() {
        return Err(Error::LagUnderflow(format!(
            "target start {target_start} is below the largest lag {}",
            lags.max()
        )));
    }
    if target_start > last {
        return Err(Error::Argument(format!(
            "target start {target_start} beyond last index {last}"
        )));
    }
    let s = ts.state_dim();
    let n = last - target_start + 1;
    let data = ts.data();
    let targets = data.subcols(target_start, n).to_owned();
    let n_lags = lags.len();
    let regressors = Mat::from_fn(s * n_lags, n, |r, j| {
        let block = r / s;
        let lag = lags.as_slice()[n_lags - 1 - block];
        data[(r % s, target_start + j - lag)]
    });
    Ok(RegressionBlocks {
        targets,
        regressors,
        target_start,
    })
}

/// Minimum-norm least-squares fit of the lagged model on targets
/// `y_{target_start..=N_T}`.
///
/// Solved through a truncated SVD pseudo-inverse of the stacked regressors,
/// never through the normal equations. Requires at least `s * |lags|`
/// samples; see [`fit_min_norm`] for the underdetermined case.
pub fn fit(
    ts: &TimeSeries,
    lags: &LagSet,
    target_start: usize,
    rel_svd_tol: f64,
) -> Result<LaggedModel> {
    fit_impl(ts, lags, target_start, rel_svd_tol, false)
}

/// Like [`fit`] but accepts fewer samples than unknowns, returning the
/// minimum-Frobenius-norm interpolant. Used for the all-lags baseline.
pub fn fit_min_norm(
    ts: &TimeSeries,
    lags: &LagSet,
    target_start: usize,
    rel_svd_tol: f64,
) -> Result<LaggedModel> {
    fit_impl(ts, lags, target_start, rel_svd_tol, true)
}

fn fit_impl(
    ts: &TimeSeries,
    lags: &LagSet,
    target_start: usize,
    rel_svd_tol: f64,
    allow_underdetermined: bool,
) -> Result<LaggedModel> {
    if !(rel_svd_tol > 0.0 && rel_svd_tol < 1.0) {
        return Err(Error::Argument(format!(
            "rel_svd_tol must lie in (0, 1), got {rel_svd_tol}"
        )));
    }
    if !ts.is_finite() {
        return Err(Error::NonFinite(
            "time series contains non-finite values".into(),
        ));
    }
    let blocks = build_regression(ts, lags, target_start)?;
    let s = ts.state_dim();
    let unknowns = s * lags.len();
    if !allow_underdetermined && blocks.n_samples() < unknowns {
        return Err(Error::Underdetermined {
            samples: blocks.n_samples(),
            unknowns,
        });
    }
    let stacked = solve_pinv(&blocks.targets, &blocks.regressors, rel_svd_tol)?;
    let n_lags = lags.len();
    // stacked = (K_{l_N} ... K_{l_1}); split back into ascending-lag order.
    let matrices = (0..n_lags)
        .map(|idx| {
            let block = n_lags - 1 - idx;
            stacked.submatrix(0, block * s, s, s).to_owned()
        })
        .collect();
    LaggedModel::new(lags.clone(), matrices)
}

/// `targets * pinv(regressors)` with relative singular-value truncation.
pub(crate) fn solve_pinv(
    targets: &Mat<f64>,
    regressors: &Mat<f64>,
    rel_tol: f64,
) -> Result<Mat<f64>> {
    let svd = regressors
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let sigma = svd.S().column_vector();
    let r = sigma.nrows();
    let smax = if r > 0 { sigma[0] } else { 0.0 };
    if !(smax > 0.0) {
        return Err(Error::Numerical(
            "regressor matrix is identically zero".into(),
        ));
    }
    let cutoff = rel_tol * smax;
    let mut yv = targets * svd.V();
    for c in 0..r {
        let inv = if sigma[c] > cutoff {
            1.0 / sigma[c]
        } else {
            0.0
        };
        for i in 0..yv.nrows() {
            yv[(i, c)] *= inv;
        }
    }
    Ok(&yv * svd.U().transpose())
}
