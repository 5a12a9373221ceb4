use serde::{Deserialize, Serialize};

use super::cloud::{prepare, Prepared, Role, SampleCloud};
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const DEFAULT_K: usize = 5;

/// Marginal distances within this relative margin of the neighbor radius
/// count as ties with it, so round-off cannot change neighbor counts.
const TIE_REL_TOL: f64 = 1e-10;

/// How the shuffle test permutes the rows of `x`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Permutation {
    /// Uniform permutation of all rows.
    #[default]
    Global,
    /// Rows of `x` move only among the `neighbors` nearest samples in `z`,
    /// which keeps the `x`–`z` association intact. Same as `Global` when
    /// `z` is empty.
    Local { neighbors: usize },
}

/// Kraskov–Stögbauer–Grassberger estimator (algorithm 1, max-norm) and its
/// Frenzel–Pompe conditional variant.
///
/// Inputs are standardized per coordinate before the neighbor search, so
/// estimates do not depend on the units of each coordinate. Results are
/// clipped at zero.
#[derive(Debug, Clone, Copy)]
pub struct KsgEstimator {
    pub k: usize,
    pub execution: Execution,
    pub permutation: Permutation,
}

impl Default for KsgEstimator {
    fn default() -> Self {
        Self::new(DEFAULT_K)
    }
}

impl KsgEstimator {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            execution: Execution::default(),
            permutation: Permutation::default(),
        }
    }

    pub fn with_execution(self, execution: Execution) -> Self {
        Self { execution, ..self }
    }

    pub fn with_permutation(self, permutation: Permutation) -> Self {
        Self {
            permutation,
            ..self
        }
    }

    pub fn mutual_information(&self, x: &SampleCloud, y: &SampleCloud) -> Result<f64> {
        self.check(&[x, y])?;
        let (px, py) = (prepare(x, Role::X), prepare(y, Role::Y));
        Ok(self.estimate(&px, &py, None, None))
    }

    /// `I(X; Y | Z)`. Falls back to [`Self::mutual_information`] when `z`
    /// has no (non-constant) coordinates.
    pub fn conditional_mutual_information(
        &self,
        x: &SampleCloud,
        y: &SampleCloud,
        z: &SampleCloud,
    ) -> Result<f64> {
        self.check(&[x, y, z])?;
        let (px, py, pz) = (
            prepare(x, Role::X),
            prepare(y, Role::Y),
            prepare(z, Role::Z),
        );
        Ok(self.estimate(&px, &py, Some(&pz), None))
    }

    pub(crate) fn check(&self, clouds: &[&SampleCloud]) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Argument("k must be at least 1".into()));
        }
        let n = clouds[0].len();
        if clouds.iter().any(|c| c.len() != n) {
            return Err(Error::Samples("sample counts differ".into()));
        }
        if n < 2 * self.k + 2 {
            return Err(Error::Samples(format!(
                "{n} samples is too few for k = {}",
                self.k
            )));
        }
        Ok(())
    }

    /// Core estimate on prepared clouds. `perm` reorders the rows of `x`.
    pub(crate) fn estimate(
        &self,
        x: &Prepared,
        y: &Prepared,
        z: Option<&Prepared>,
        perm: Option<&[usize]>,
    ) -> f64 {
        if x.dim == 0 || y.dim == 0 {
            return 0.0;
        }
        let n = x.n;
        let k = self.k;
        let psi = digamma_table(n + 1);
        let xi = |i: usize| perm.map_or(i, |p| p[i]);
        let value = match z.filter(|z| z.dim > 0) {
            None => {
                let terms = self.execution.map_range(n, |i| {
                    let (xr, yr) = (x.row(xi(i)), y.row(i));
                    let eps = kth_distance(n, i, k, |j, bound| {
                        let d = max_dist(xr, x.row(xi(j)), bound);
                        if d >= bound {
                            return d;
                        }
                        d.max(max_dist(yr, y.row(j), bound))
                    });
                    let eps = eps * (1.0 - TIE_REL_TOL);
                    let (mut nx, mut ny) = (0usize, 0usize);
                    for j in (0..n).filter(|&j| j != i) {
                        if max_dist(xr, x.row(xi(j)), eps) < eps {
                            nx += 1;
                        }
                        if max_dist(yr, y.row(j), eps) < eps {
                            ny += 1;
                        }
                    }
                    psi[nx + 1] + psi[ny + 1]
                });
                psi[k] + psi[n] - terms.iter().sum::<f64>() / n as f64
            }
            Some(z) => {
                let terms = self.execution.map_range(n, |i| {
                    let (xr, yr, zr) = (x.row(xi(i)), y.row(i), z.row(i));
                    let eps = kth_distance(n, i, k, |j, bound| {
                        let dz = max_dist(zr, z.row(j), bound);
                        if dz >= bound {
                            return dz;
                        }
                        let d = dz.max(max_dist(xr, x.row(xi(j)), bound));
                        if d >= bound {
                            return d;
                        }
                        d.max(max_dist(yr, y.row(j), bound))
                    });
                    let eps = eps * (1.0 - TIE_REL_TOL);
                    let (mut nxz, mut nyz, mut nz) = (0usize, 0usize, 0usize);
                    for j in (0..n).filter(|&j| j != i) {
                        let dz = max_dist(zr, z.row(j), eps);
                        if dz < eps {
                            nz += 1;
                            if max_dist(xr, x.row(xi(j)), eps) < eps {
                                nxz += 1;
                            }
                            if max_dist(yr, y.row(j), eps) < eps {
                                nyz += 1;
                            }
                        }
                    }
                    (psi[k] - psi[nxz + 1]) - (psi[nyz + 1] - psi[nz + 1])
                });
                terms.iter().sum::<f64>() / n as f64
            }
        };
        value.max(0.0)
    }
}

pub fn mutual_information(x: &SampleCloud, y: &SampleCloud, k: usize) -> Result<f64> {
    KsgEstimator::new(k).mutual_information(x, y)
}

pub fn conditional_mutual_information(
    x: &SampleCloud,
    y: &SampleCloud,
    z: &SampleCloud,
    k: usize,
) -> Result<f64> {
    KsgEstimator::new(k).conditional_mutual_information(x, y, z)
}

/// Max-norm distance; may stop early once it reaches `bound`, in which case
/// the returned value is some partial maximum `>= bound`.
#[inline]
fn max_dist(a: &[f64], b: &[f64], bound: f64) -> f64 {
    let mut d = 0.0f64;
    for (u, v) in a.iter().zip(b) {
        d = d.max((u - v).abs());
        if d >= bound {
            break;
        }
    }
    d
}

/// Distance from point `i` to its `k`-th nearest neighbor (excluding
/// itself). `dist(j, bound)` must be exact when below `bound`.
#[inline]
fn kth_distance(n: usize, i: usize, k: usize, dist: impl Fn(usize, f64) -> f64) -> f64 {
    let mut best = vec![f64::INFINITY; k];
    for j in (0..n).filter(|&j| j != i) {
        let bound = best[k - 1];
        let d = dist(j, bound);
        if d < bound {
            let mut pos = k - 1;
            while pos > 0 && best[pos - 1] > d {
                best[pos] = best[pos - 1];
                pos -= 1;
            }
            best[pos] = d;
        }
    }
    best[k - 1]
}

/// `psi[m]` is the digamma function at integer `m >= 1`; `psi[0]` is unused.
fn digamma_table(max: usize) -> Vec<f64> {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut t = vec![0.0; max + 1];
    if max >= 1 {
        t[1] = -EULER_GAMMA;
    }
    for m in 2..=max {
        t[m] = t[m - 1] + 1.0 / (m - 1) as f64;
    }
    t
}
