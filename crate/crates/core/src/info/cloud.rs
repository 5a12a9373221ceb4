use faer::MatRef;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// `n` samples in `R^D`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    n: usize,
    dim: usize,
    points: Vec<f64>,
}

impl SampleCloud {
    pub fn from_rows<V: AsRef<[f64]>>(rows: &[V]) -> Result<Self> {
        let n = rows.len();
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut points = Vec::with_capacity(n * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::Samples("ragged sample rows".into()));
            }
            points.extend_from_slice(r);
        }
        Self::from_flat(n, dim, points)
    }

    /// One-dimensional samples.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::from_flat(values.len(), 1, values.to_vec())
    }

    /// Treats each column of `m` as one sample (time columns as samples).
    pub fn from_sample_columns(m: MatRef<'_, f64>) -> Result<Self> {
        let (dim, n) = (m.nrows(), m.ncols());
        let mut points = Vec::with_capacity(n * dim);
        for j in 0..n {
            for i in 0..dim {
                points.push(m[(i, j)]);
            }
        }
        Self::from_flat(n, dim, points)
    }

    /// `n` samples with no coordinates: the empty conditioning set.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            dim: 0,
            points: Vec::new(),
        }
    }

    fn from_flat(n: usize, dim: usize, points: Vec<f64>) -> Result<Self> {
        if let Some(i) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "sample {} coordinate {}",
                i / dim.max(1),
                i % dim.max(1)
            )));
        }
        Ok(Self { n, dim, points })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Applies `x -> scale[c] * x + shift[c]` per coordinate.
    pub fn affine(&self, scale: &[f64], shift: &[f64]) -> Self {
        let mut points = self.points.clone();
        for (i, v) in points.iter_mut().enumerate() {
            let c = i % self.dim;
            *v = scale[c] * *v + shift[c];
        }
        Self {
            n: self.n,
            dim: self.dim,
            points,
        }
    }
}

const JITTER_SCALE: f64 = 1e-12;
const JITTER_SEED: u64 = 0x005e_ed0f_d1ce;

/// Which variable of an estimate a cloud plays; each role gets its own
/// jitter stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Role {
    X = 0,
    Y = 1,
    Z = 2,
}

/// Rescaled copy of a cloud used by the estimators: unit variance per
/// coordinate, constant coordinates dropped, exact duplicate rows separated
/// by a deterministic `1e-12`-scale jitter.
///
/// Coordinates are divided by their standard deviation but not centered.
/// Max-norm neighbor searches are translation invariant, and skipping the
/// shift keeps full relative precision for samples far smaller than the mean.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub n: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Prepared {
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

pub(crate) fn prepare(cloud: &SampleCloud, role: Role) -> Prepared {
    let n = cloud.n;
    let mut keep = Vec::new();
    for c in 0..cloud.dim {
        let mean = (0..n).map(|i| cloud.points[i * cloud.dim + c]).sum::<f64>() / n as f64;
        let var = (0..n)
            .map(|i| {
                let d = cloud.points[i * cloud.dim + c] - mean;
                d * d
            })
            .sum::<f64>()
            / n as f64;
        let sd = var.sqrt();
        if sd > 0.0 && sd > 1e-13 * mean.abs() {
            keep.push((c, sd));
        }
    }
    let dim = keep.len();
    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        for &(c, sd) in &keep {
            data.push(cloud.points[i * cloud.dim + c] / sd);
        }
    }
    let mut p = Prepared { n, dim, data };
    jitter_duplicates(&mut p, role);
    p
}

fn jitter_duplicates(p: &mut Prepared, role: Role) {
    if p.dim == 0 || p.n < 2 {
        return;
    }
    let mut order: Vec<usize> = (0..p.n).collect();
    order.sort_by(|&a, &b| {
        p.row(a)
            .iter()
            .zip(p.row(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut dup = vec![false; p.n];
    for w in order.windows(2) {
        if p.row(w[0]) == p.row(w[1]) {
            dup[w[0]] = true;
            dup[w[1]] = true;
        }
    }
    for i in (0..p.n).filter(|&i| dup[i]) {
        let mut rng = ChaCha8Rng::seed_from_u64(JITTER_SEED);
        rng.set_stream(3 * i as u64 + role as u64);
        for c in 0..p.dim {
            let v = &mut p.data[i * p.dim + c];
            *v += JITTER_SCALE * v.abs().max(1.0) * rng.random_range(-1.0..1.0);
        }
    }
}
