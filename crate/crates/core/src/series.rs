use faer::{ColRef, Mat, MatRef};

use crate::error::{Error, Result};

/// An `s`-dimensional state sampled at a uniform time step.
///
/// Column `j` holds the state at time `t0 + j * dt`.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    data: Mat<f64>,
    dt: f64,
    t0: f64,
}

impl TimeSeries {
    /// Validating constructor: at least one row, at least two columns, finite
    /// entries and a positive finite step.
    pub fn new(data: Mat<f64>, dt: f64, t0: f64) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::Dimension(
                "time series needs at least one state dimension".into(),
            ));
        }
        if data.ncols() < 2 {
            return Err(Error::Dimension(format!(
                "time series needs at least two samples, got {}",
                data.ncols()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Argument(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if !t0.is_finite() {
            return Err(Error::Argument("start time must be finite".into()));
        }
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                if !data[(i, j)].is_finite() {
                    return Err(Error::NonFinite(format!(
                        "entry ({i}, {j}) is {}",
                        data[(i, j)]
                    )));
                }
            }
        }
        Ok(Self { data, dt, t0 })
    }

    /// Builds a series from per-sample state vectors.
    pub fn from_columns(columns: &[Vec<f64>], dt: f64, t0: f64) -> Result<Self> {
        let s = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != s) {
            return Err(Error::Dimension("ragged columns".into()));
        }
        let data = Mat::from_fn(s, columns.len(), |i, j| columns[j][i]);
        Self::new(data, dt, t0)
    }

    /// Model output may legitimately diverge (forecasting far past the data),
    /// so closed-loop results skip the finiteness check.
    pub(crate) fn from_model_output(data: Mat<f64>, dt: f64, t0: f64) -> Self {
        Self { data, dt, t0 }
    }

    pub fn state_dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of samples, `N_T + 1`.
    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    /// Index of the last sample, `N_T`.
    pub fn last_index(&self) -> usize {
        self.data.ncols() - 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn data(&self) -> MatRef<'_, f64> {
        self.data.as_ref()
    }

    pub fn column(&self, j: usize) -> ColRef<'_, f64> {
        self.data.col(j)
    }

    pub fn into_data(self) -> Mat<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        (0..self.data.ncols())
            .all(|j| (0..self.data.nrows()).all(|i| self.data[(i, j)].is_finite()))
    }

    /// Columns `start..=end` as a new series whose `t0` is the time of `start`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.last_index() {
            return Err(Error::Argument(format!(
                "slice {start}..={end} invalid for series with last index {}",
                self.last_index()
            )));
        }
        let data = self.data.subcols(start, end - start + 1).to_owned();
        Ok(Self {
            data,
            dt: self.dt,
            t0: self.time(start),
        })
    }

    /// Index of the sample nearest to time `t`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = ((t - self.t0) / self.dt).round();
        if x < 0.0 || x > self.last_index() as f64 {
            return Err(Error::Argument(format!(
                "time {t} outside [{}, {}]",
                self.t0,
                self.time(self.last_index())
            )));
        }
        Ok(x as usize)
    }

    /// Samples with `t_start <= t <= t_end` (nearest grid points).
    pub fn window(&self, t_start: f64, t_end: f64) -> Result<Self> {
        let a = self.index_of(t_start)?;
        let b = self.index_of(t_end)?;
        self.slice(a, b)
    }
}
