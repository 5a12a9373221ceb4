use faer::{Mat, MatRef};

use super::LagSet;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// A fitted lagged linear model: one `s × s` matrix per lag, in lag order.
#[derive(Debug, Clone)]
pub struct LaggedModel {
    lags: LagSet,
    matrices: Vec<Mat<f64>>,
}

impl LaggedModel {
    pub fn new(lags: LagSet, matrices: Vec<Mat<f64>>) -> Result<Self> {
        if matrices.len() != lags.len() {
            return Err(Error::Dimension(format!(
                "{} matrices for {} lags",
                matrices.len(),
                lags.len()
            )));
        }
        let s = matrices[0].nrows();
        if s == 0 {
            return Err(Error::Dimension("zero state dimension".into()));
        }
        for (k, m) in matrices.iter().enumerate() {
            if m.nrows() != s || m.ncols() != s {
                return Err(Error::Dimension(format!(
                    "matrix for lag {} is {}x{}, expected {s}x{s}",
                    lags.as_slice()[k],
                    m.nrows(),
                    m.ncols()
                )));
            }
            for j in 0..s {
                for i in 0..s {
                    if !m[(i, j)].is_finite() {
                        return Err(Error::NonFinite(format!(
                            "matrix for lag {}",
                            lags.as_slice()[k]
                        )));
                    }
                }
            }
        }
        Ok(Self { lags, matrices })
    }

    pub fn state_dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn lags(&self) -> &LagSet {
        &self.lags
    }

    pub fn max_lag(&self) -> usize {
        self.lags.max()
    }

    pub fn matrices(&self) -> &[Mat<f64>] {
        &self.matrices
    }

    /// Matrix of the `k`-th lag in ascending order.
    pub fn matrix(&self, k: usize) -> MatRef<'_, f64> {
        self.matrices[k].as_ref()
    }

    pub fn matrix_for_lag(&self, lag: usize) -> Option<MatRef<'_, f64>> {
        self.lags.position(lag).map(|k| self.matrices[k].as_ref())
    }

    /// `(lag, ‖K_lag‖_F)` in lag order.
    pub fn lag_matrix_norms(&self) -> Vec<(usize, f64)> {
        self.lags
            .iter()
            .zip(&self.matrices)
            .map(|(l, m)| (l, m.norm_l2()))
            .collect()
    }

    /// Next state from a history ordered oldest to newest; the last entry is
    /// `y_j` and the result is `y_{j+1} = Σ K_l y_{j+1-l}`.
    pub fn predict_one<V: AsRef<[f64]>>(&self, history: &[V]) -> Result<Vec<f64>> {
        let s = self.state_dim();
        if history.len() < self.max_lag() {
            return Err(Error::LagUnderflow(format!(
                "history of length {} is shorter than the largest lag {}",
                history.len(),
                self.max_lag()
            )));
        }
        let n = history.len();
        let mut out = vec![0.0; s];
        for (lag, k) in self.lags.iter().zip(&self.matrices) {
            let y = history[n - lag].as_ref();
            if y.len() != s {
                return Err(Error::Dimension(format!(
                    "history entry has length {}, expected {s}",
                    y.len()
                )));
            }
            for j in 0..s {
                let yj = y[j];
                for i in 0..s {
                    out[i] += k[(i, j)] * yj;
                }
            }
        }
        Ok(out)
    }

    /// Writes `Σ K_l data[:, col - l]` into `data[:, col]`.
    fn step_in_place(&self, data: &mut Mat<f64>, col: usize) {
        let s = self.state_dim();
        for i in 0..s {
            data[(i, col)] = 0.0;
        }
        for (lag, k) in self.lags.iter().zip(&self.matrices) {
            let src = col - lag;
            for j in 0..s {
                let yj = data[(j, src)];
                for i in 0..s {
                    let v = k[(i, j)] * yj;
                    data[(i, col)] += v;
                }
            }
        }
    }

    /// Closed-loop run seeded with true samples `0..seed_end`.
    ///
    /// Columns `seed_end..=horizon_end + forecast_steps` are produced by
    /// feeding the model its own outputs. `horizon_end` must lie inside the
    /// data; `forecast_steps` extends past it. The output may contain
    /// non-finite values if the model diverges.
    pub fn reconstruct(
        &self,
        ts: &TimeSeries,
        seed_end: usize,
        horizon_end: usize,
        forecast_steps: usize,
    ) -> Result<TimeSeries> {
        if ts.state_dim() != self.state_dim() {
            return Err(Error::Dimension(format!(
                "series has {} states, model has {}",
                ts.state_dim(),
                self.state_dim()
            )));
        }
        if seed_end < self.max_lag() {
            return Err(Error::LagUnderflow(format!(
                "seed of {seed_end} samples is shorter than the largest lag {}",
                self.max_lag()
            )));
        }
        if horizon_end > ts.last_index() {
            return Err(Error::Argument(format!(
                "horizon end {horizon_end} beyond last index {}",
                ts.last_index()
            )));
        }
        if seed_end > horizon_end + 1 {
            return Err(Error::Argument(format!(
                "seed end {seed_end} past horizon end {horizon_end}"
            )));
        }
        let s = self.state_dim();
        let n_out = horizon_end + forecast_steps + 1;
        let src = ts.data();
        let mut data = Mat::from_fn(
            s,
            n_out,
            |i, j| if j < seed_end { src[(i, j)] } else { 0.0 },
        );
        for col in seed_end..n_out {
            self.step_in_place(&mut data, col);
        }
        Ok(TimeSeries::from_model_output(data, ts.dt(), ts.t0()))
    }

    /// Open-loop one-step predictions `ŷ_j` for `j in start..=end`, each from
    /// true data. Diagnostic only.
    pub fn one_step_predictions(
        &self,
        ts: &TimeSeries,
        start: usize,
        end: usize,
    ) -> Result<Mat<f64>> {
        if start < self.max_lag() {
            return Err(Error::LagUnderflow(format!(
                "start {start} below largest lag {}",
                self.max_lag()
            )));
        }
        if end > ts.last_index() || start > end {
            return Err(Error::Argument(format!("range {start}..={end} invalid")));
        }
        Ok(self.window_predictions(ts.data(), start, end - start + 1))
    }

    /// Predictions for target columns `start..start + n` from true data.
    pub(crate) fn window_predictions(
        &self,
        data: MatRef<'_, f64>,
        start: usize,
        n: usize,
    ) -> Mat<f64> {
        let s = self.state_dim();
        let mut out = Mat::<f64>::zeros(s, n);
        for (lag, k) in self.lags.iter().zip(&self.matrices) {
            let rhs = data.subcols(start - lag, n);
            out += k * rhs;
        }
        out
    }

    /// Frobenius norm of the one-step residual on targets `target_start..=N_T`.
    pub fn training_residual(&self, ts: &TimeSeries, target_start: usize) -> Result<f64> {
        if target_start < self.max_lag() {
            return Err(Error::LagUnderflow(format!(
                "target start {target_start} below largest lag {}",
                self.max_lag()
            )));
        }
        let n = ts.last_index() + 1 - target_start;
        let pred = self.window_predictions(ts.data(), target_start, n);
        let diff = ts.data().subcols(target_start, n) - &pred;
        Ok(diff.norm_l2())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_model(pairs: &[(usize, f64)]) -> LaggedModel {
        let lags = LagSet::new(pairs.iter().map(|p| p.0).collect()).unwrap();
        let mats = lags
            .iter()
            .map(|l| Mat::from_fn(1, 1, |_, _| pairs.iter().find(|p| p.0 == l).unwrap().1))
            .collect();
        LaggedModel::new(lags, mats).unwrap()
    }

    #[test]
    fn identity_predicts_last_state() {
        let m = LaggedModel::new(LagSet::unit(), vec![Mat::identity(2, 2)]).unwrap();
        assert_eq!(m.predict_one(&[vec![3.0, -1.0]]).unwrap(), vec![3.0, -1.0]);
        assert_eq!(m.predict_one(&[vec![0.0, 0.0]]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn two_lag_arithmetic() {
        let m = scalar_model(&[(1, 0.5), (5, 0.3)]);
        let history = [[2.0], [9.0], [9.0], [9.0], [1.0]];
        let y = m.predict_one(&history).unwrap();
        assert!((y[0] - 1.1).abs() < 1e-15);
        assert!(matches!(
            m.predict_one(&history[1..]),
            Err(Error::LagUnderflow(_))
        ));
        assert_eq!(m.predict_one(&[[0.0]; 7]).unwrap(), vec![0.0]);
    }

    #[test]
    fn norms_and_validation() {
        let m = LaggedModel::new(LagSet::unit(), vec![Mat::identity(3, 3)]).unwrap();
        let n = m.lag_matrix_norms();
        assert_eq!(n[0].0, 1);
        assert!((n[0].1 - 3f64.sqrt()).abs() < 1e-15);
        let z = LaggedModel::new(LagSet::unit(), vec![Mat::zeros(2, 2)]).unwrap();
        assert_eq!(z.lag_matrix_norms()[0].1, 0.0);
        assert!(LaggedModel::new(LagSet::unit(), vec![Mat::zeros(2, 3)]).is_err());
        assert!(
            LaggedModel::new(LagSet::new(vec![1, 2]).unwrap(), vec![Mat::zeros(2, 2)]).is_err()
        );
    }

    #[test]
    fn reconstruct_exact_linear_map() {
        let a = Mat::from_fn(2, 2, |i, j| [[0.9, -0.2], [0.1, 0.95]][i][j]);
        let mut data = Mat::<f64>::zeros(2, 60);
        data[(0, 0)] = 1.0;
        data[(1, 0)] = -0.5;
        for j in 1..60 {
            let next = &a * data.col(j - 1);
            data.col_mut(j).copy_from(&next);
        }
        let ts = TimeSeries::new(data, 0.1, 0.0).unwrap();
        let m = LaggedModel::new(LagSet::unit(), vec![a]).unwrap();
        let r = m.reconstruct(&ts, 1, 59, 0).unwrap();
        for j in 0..60 {
            for i in 0..2 {
                assert!((r.data()[(i, j)] - ts.data()[(i, j)]).abs() < 1e-13);
            }
        }
        assert!(matches!(
            m.reconstruct(&ts, 0, 59, 0),
            Err(Error::LagUnderflow(_))
        ));
        assert_eq!(m.reconstruct(&ts, 1, 59, 10).unwrap().len(), 70);
    }
}
