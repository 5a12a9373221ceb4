use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

const RANK_TOL: f64 = 1e-12;

/// Leading spatial modes of a mean-removed snapshot matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PodBasis {
    /// `K × n_modes`, orthonormal columns, stored row-major.
    pub modes: Vec<Vec<f64>>,
    /// All singular values of the centered snapshot matrix, descending.
    pub singular_values: Vec<f64>,
    pub energy_fraction: f64,
    pub mean_field: Vec<f64>,
}

impl PodBasis {
    pub fn n_modes(&self) -> usize {
        self.modes.first().map_or(0, Vec::len)
    }

    pub fn field_dim(&self) -> usize {
        self.mean_field.len()
    }

    pub fn modes_matrix(&self) -> Mat<f64> {
        Mat::from_fn(self.field_dim(), self.n_modes(), |i, j| self.modes[i][j])
    }
}

/// Projects a field onto its `n_modes` leading POD modes.
pub fn pod_reduce(field: &TimeSeries, n_modes: usize) -> Result<(PodBasis, TimeSeries)> {
    let (k, n) = (field.state_dim(), field.len());
    if n_modes == 0 || n_modes > k.min(n) {
        return Err(Error::Argument(format!(
            "cannot take {n_modes} modes of a {k}×{n} field"
        )));
    }
    let data = field.data();
    let mean_field: Vec<f64> = (0..k)
        .map(|i| (0..n).map(|j| data[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let centered = Mat::from_fn(k, n, |i, j| data[(i, j)] - mean_field[i]);
    let svd = centered
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let sv: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = sv
        .iter()
        .filter(|&&x| x > RANK_TOL * smax && x > 0.0)
        .count();
    if rank < n_modes {
        return Err(Error::Rank {
            requested: n_modes,
            rank,
        });
    }
    let total: f64 = sv.iter().map(|x| x * x).sum();
    let kept: f64 = sv[..n_modes].iter().map(|x| x * x).sum();
    let u = svd.U().subcols(0, n_modes);
    let coeffs = u.transpose() * &centered;
    let basis = PodBasis {
        modes: (0..k)
            .map(|i| (0..n_modes).map(|j| u[(i, j)]).collect())
            .collect(),
        singular_values: sv,
        energy_fraction: kept / total,
        mean_field,
    };
    Ok((basis, TimeSeries::new(coeffs, field.dt(), field.t0())?))
}

/// `mean_field + modes · coeffs_j` for every column.
pub fn pod_reconstruct(basis: &PodBasis, coeffs: &TimeSeries) -> Result<TimeSeries> {
    if coeffs.state_dim() != basis.n_modes() {
        return Err(Error::Dimension(format!(
            "{} coefficients per sample, basis has {} modes",
            coeffs.state_dim(),
            basis.n_modes()
        )));
    }
    let mut field = basis.modes_matrix() * coeffs.data();
    for j in 0..field.ncols() {
        for (i, m) in basis.mean_field.iter().enumerate() {
            field[(i, j)] += m;
        }
    }
    TimeSeries::new(field, coeffs.dt(), coeffs.t0())
}
