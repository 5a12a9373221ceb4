use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

const CONTOUR_POINTS: usize = 32;
const NOISE_MODES: usize = 8;
const DEFAULT_SUBSTEPS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialField {
    Zero,
    /// Random combination of the lowest Fourier modes, scaled to `amplitude`.
    Noise {
        amplitude: f64,
        seed: u64,
    },
    /// Field values on the grid.
    Explicit {
        values: Vec<f64>,
    },
}

/// Kuramoto–Sivashinsky run in rescaled form
/// `u_t + u_xx + ν u_xxxx + u u_x = 0` on `[0, 2π)` with `ν = (π/L)²`.
///
/// Snapshots are recorded every `dt` from `t_burn` for a further `t_final`
/// time units, so the output has `round(t_final / dt) + 1` columns and
/// starts at time `t_burn`. Each snapshot interval is covered by `substeps`
/// ETDRK4 steps of size `dt / substeps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsSpec {
    pub half_period: f64,
    pub n_grid: usize,
    pub dt: f64,
    pub t_burn: f64,
    pub t_final: f64,
    pub initial: InitialField,
    #[serde(default = "default_true")]
    pub nonlinear: bool,
    /// Integrator steps per snapshot interval.
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

fn default_true() -> bool {
    true
}

fn default_substeps() -> usize {
    DEFAULT_SUBSTEPS
}

impl Default for KsSpec {
    fn default() -> Self {
        let half_period = 11.0;
        Self {
            half_period,
            n_grid: 128,
            dt: 0.25,
            t_burn: 10.0,
            t_final: (half_period / PI).powi(4),
            initial: InitialField::Noise {
                amplitude: 0.1,
                seed: 0,
            },
            nonlinear: true,
            substeps: DEFAULT_SUBSTEPS,
        }
    }
}

impl KsSpec {
    /// Integrator step size.
    pub fn step(&self) -> f64 {
        self.dt / self.substeps as f64
    }

    pub fn viscosity(&self) -> f64 {
        (PI / self.half_period).powi(2)
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.n_grid)
            .map(|j| 2.0 * PI * j as f64 / self.n_grid as f64)
            .collect()
    }

    /// Integer wavenumbers in FFT order; the Nyquist entry is zero.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_grid;
        (0..n)
            .map(|j| {
                if j < n / 2 {
                    j as f64
                } else if j == n / 2 {
                    0.0
                } else {
                    j as f64 - n as f64
                }
            })
            .collect()
    }

    /// Linear growth rate `k² − νk⁴` of each Fourier mode.
    pub fn linear_rates(&self) -> Vec<f64> {
        let nu = self.viscosity();
        self.wavenumbers()
            .iter()
            .map(|&k| k * k - nu * k.powi(4))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n_grid < 4 || !self.n_grid.is_power_of_two() {
            return Err(Error::Argument(format!(
                "grid size must be a power of two ≥ 4, got {}",
                self.n_grid
            )));
        }
        if self.substeps == 0 {
            return Err(Error::Argument("substeps must be at least 1".into()));
        }
        if !(self.half_period > 0.0 && self.dt > 0.0 && self.t_burn >= 0.0 && self.t_final > 0.0) {
            return Err(Error::Argument(
                "half period, dt and t_final must be positive, t_burn nonnegative".into(),
            ));
        }
        if let InitialField::Explicit { values } = &self.initial {
            if values.len() != self.n_grid {
                return Err(Error::Dimension(format!(
                    "initial field has {} values, grid has {}",
                    values.len(),
                    self.n_grid
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("initial field".into()));
            }
        }
        Ok(())
    }

    fn initial_values(&self) -> Vec<f64> {
        match &self.initial {
            InitialField::Zero => vec![0.0; self.n_grid],
            InitialField::Explicit { values } => values.clone(),
            InitialField::Noise { amplitude, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let coeffs: Vec<(f64, f64)> = (0..NOISE_MODES)
                    .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                self.grid()
                    .iter()
                    .map(|&x| {
                        let v: f64 = coeffs
                            .iter()
                            .enumerate()
                            .map(|(m, &(a, b))| {
                                let k = (m + 1) as f64;
                                a * (k * x).cos() + b * (k * x).sin()
                            })
                            .sum();
                        amplitude * v / NOISE_MODES as f64
                    })
                    .collect()
            }
        }
    }
}

/// ETDRK4 stepper with contour-integral φ coefficients.
struct Etdrk4 {
    n: usize,
    e: Vec<f64>,
    e2: Vec<f64>,
    q: Vec<f64>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
    /// `-i k / 2` on retained modes, zero on dealiased ones.
    g: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    nonlinear: bool,
}

impl Etdrk4 {
    fn new(spec: &KsSpec) -> Self {
        let n = spec.n_grid;
        let h = spec.step();
        let rates = spec.linear_rates();
        let ks = spec.wavenumbers();
        let kmax = n as f64 / 3.0;
        let roots: Vec<Complex64> = (1..=CONTOUR_POINTS)
            .map(|j| {
                Complex64::from_polar(1.0, PI * (j as f64 - 0.5) / CONTOUR_POINTS as f64 * 2.0)
            })
            .collect();
        let contour_mean = |c: f64, f: &dyn Fn(Complex64) -> Complex64| -> f64 {
            roots
                .iter()
                .map(|&r| f(Complex64::new(c, 0.0) + r).re)
                .sum::<f64>()
                / CONTOUR_POINTS as f64
        };
        let mut q = Vec::with_capacity(n);
        let (mut f1, mut f2, mut f3) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for &rate in &rates {
            let c = h * rate;
            q.push(h * contour_mean(c, &|z| ((z / 2.0).exp() - 1.0) / z));
            f1.push(
                h * contour_mean(c, &|z| {
                    (-4.0 - z + z.exp() * (4.0 - 3.0 * z + z * z)) / z.powi(3)
                }),
            );
            f2.push(h * contour_mean(c, &|z| (2.0 + z + z.exp() * (z - 2.0)) / z.powi(3)));
            f3.push(
                h * contour_mean(c, &|z| {
                    (-4.0 - 3.0 * z - z * z + z.exp() * (4.0 - z)) / z.powi(3)
                }),
            );
        }
        let g = ks
            .iter()
            .map(|&k| {
                if k.abs() < kmax {
                    Complex64::new(0.0, -0.5 * k)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let mut planner = FftPlanner::new();
        Self {
            n,
            e: rates.iter().map(|r| (h * r).exp()).collect(),
            e2: rates.iter().map(|r| (h * r / 2.0).exp()).collect(),
            q,
            f1,
            f2,
            f3,
            g,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            nonlinear: spec.nonlinear,
        }
    }

    fn to_spectral(&self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform; returns the full complex field.
    fn to_physical_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf = v.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    fn to_physical(&self, v: &[Complex64]) -> Vec<f64> {
        self.to_physical_complex(v).iter().map(|c| c.re).collect()
    }

    /// Spectral nonlinear term `-(i k / 2) FFT(u²)`.
    fn nonlinear_term(&self, v: &[Complex64]) -> Vec<Complex64> {
        if !self.nonlinear {
            return vec![Complex64::new(0.0, 0.0); self.n];
        }
        let u = self.to_physical(v);
        let sq: Vec<f64> = u.iter().map(|x| x * x).collect();
        let mut w = self.to_spectral(&sq);
        for (wi, gi) in w.iter_mut().zip(&self.g) {
            *wi *= gi;
        }
        w
    }

    fn step(&self, v: &mut [Complex64]) {
        let n = self.n;
        let nv = self.nonlinear_term(v);
        let a: Vec<Complex64> = (0..n)
            .map(|i| v[i] * self.e2[i] + nv[i] * self.q[i])
            .collect();
        let na = self.nonlinear_term(&a);
        let b: Vec<Complex64> = (0..n)
            .map(|i| v[i] * self.e2[i] + na[i] * self.q[i])
            .collect();
        let nb = self.nonlinear_term(&b);
        let c: Vec<Complex64> = (0..n)
            .map(|i| a[i] * self.e2[i] + (nb[i] * 2.0 - nv[i]) * self.q[i])
            .collect();
        let nc = self.nonlinear_term(&c);
        for i in 0..n {
            v[i] = v[i] * self.e[i]
                + nv[i] * self.f1[i]
                + (na[i] + nb[i]) * (2.0 * self.f2[i])
                + nc[i] * self.f3[i];
        }
        self.symmetrize(v);
    }

    /// Projects onto spectra of real fields; otherwise round-off in the
    /// unstable modes grows without the nonlinear term to saturate it.
    fn symmetrize(&self, v: &mut [Complex64]) {
        let n = self.n;
        v[0].im = 0.0;
        v[n / 2] = Complex64::new(0.0, 0.0);
        for j in 1..n / 2 {
            let avg = (v[j] + v[n - j].conj()) * 0.5;
            v[j] = avg;
            v[n - j] = avg.conj();
        }
    }
}

/// Integrates the KS equation and returns grid snapshots after burn-in.
pub fn integrate_ks_etdrk4(spec: &KsSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let stepper = Etdrk4::new(spec);
    let mut v = stepper.to_spectral(&spec.initial_values());
    stepper.symmetrize(&mut v);
    let n_burn = (spec.t_burn / spec.dt).round() as usize;
    let n_record = (spec.t_final / spec.dt).round() as usize;
    let mut out = Mat::<f64>::zeros(spec.n_grid, n_record + 1);
    let mut step = 0;
    let mut advance = |v: &mut Vec<Complex64>| -> Result<()> {
        for _ in 0..spec.substeps {
            stepper.step(v);
        }
        step += 1;
        if v.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Divergence { step });
        }
        Ok(())
    };
    for _ in 0..n_burn {
        advance(&mut v)?;
    }
    for col in 0..=n_record {
        if col > 0 {
            advance(&mut v)?;
        }
        for (i, x) in stepper.to_physical(&v).into_iter().enumerate() {
            out[(i, col)] = x;
        }
    }
    TimeSeries::new(out, spec.dt, n_burn as f64 * spec.dt)
}
