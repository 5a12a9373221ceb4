use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum OdeSystem {
    Lorenz63 { sigma: f64, rho: f64, beta: f64 },
    Rossler { a: f64, b: f64, c: f64 },
}

impl OdeSystem {
    pub fn lorenz63() -> Self {
        OdeSystem::Lorenz63 {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }

    pub fn rossler() -> Self {
        OdeSystem::Rossler {
            a: 0.1,
            b: 0.1,
            c: 14.0,
        }
    }

    pub fn rhs(&self, y: &[f64], dy: &mut [f64]) {
        match *self {
            OdeSystem::Lorenz63 { sigma, rho, beta } => {
                dy[0] = sigma * (y[1] - y[0]);
                dy[1] = y[0] * (rho - y[2]) - y[1];
                dy[2] = y[0] * y[1] - beta * y[2];
            }
            OdeSystem::Rossler { a, b, c } => {
                dy[0] = -y[1] - y[2];
                dy[1] = y[0] + a * y[1];
                dy[2] = b + y[2] * (y[0] - c);
            }
        }
    }
}

/// A fixed-step initial value problem for one of the built-in systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeSpec {
    pub system: OdeSystem,
    pub y0: Vec<f64>,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
}

impl OdeSpec {
    pub fn lorenz63(t_end: f64) -> Self {
        Self {
            system: OdeSystem::lorenz63(),
            y0: vec![1.0, 1.0, 1.0],
            dt: 0.01,
            t_start: 0.0,
            t_end,
        }
    }

    pub fn rossler(t_end: f64) -> Self {
        Self {
            system: OdeSystem::rossler(),
            y0: vec![1.0, 1.0, 0.0],
            dt: 0.01,
            t_start: 0.0,
            t_end,
        }
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).round() as usize
    }
}

/// Classical RK4 for `y' = f(t, y)` with `n_steps` steps of size `dt`.
/// Returns the `n_steps + 1` sampled states as columns.
pub fn rk4_integrate<F>(f: F, y0: &[f64], t_start: f64, dt: f64, n_steps: usize) -> Result<Mat<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let s = y0.len();
    let mut out = Mat::<f64>::zeros(s, n_steps + 1);
    let mut y = y0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; s], vec![0.0; s], vec![0.0; s], vec![0.0; s]);
    let mut tmp = vec![0.0; s];
    for i in 0..s {
        out[(i, 0)] = y[i];
    }
    for step in 1..=n_steps {
        let t = t_start + (step - 1) as f64 * dt;
        f(t, &y, &mut k1);
        for i in 0..s {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        f(t + 0.5 * dt, &tmp, &mut k2);
        for i in 0..s {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        f(t + 0.5 * dt, &tmp, &mut k3);
        for i in 0..s {
            tmp[i] = y[i] + dt * k3[i];
        }
        f(t + dt, &tmp, &mut k4);
        for i in 0..s {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step });
        }
        for i in 0..s {
            out[(i, step)] = y[i];
        }
    }
    Ok(out)
}

pub fn integrate_rk4(spec: &OdeSpec) -> Result<TimeSeries> {
    if !(spec.dt > 0.0 && spec.dt.is_finite()) {
        return Err(Error::Argument(format!(
            "dt must be positive, got {}",
            spec.dt
        )));
    }
    if !(spec.t_end > spec.t_start) {
        return Err(Error::Argument(format!(
            "empty time span [{}, {}]",
            spec.t_start, spec.t_end
        )));
    }
    if spec.y0.len() != 3 {
        return Err(Error::Dimension(format!(
            "initial state has length {}, expected 3",
            spec.y0.len()
        )));
    }
    let sys = spec.system;
    let data = rk4_integrate(
        |_, y, dy| sys.rhs(y, dy),
        &spec.y0,
        spec.t_start,
        spec.dt,
        spec.n_steps(),
    )?;
    TimeSeries::new(data, spec.dt, spec.t_start)
}
