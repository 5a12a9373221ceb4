//! Greedy lag selection by conditional information gain.
//!
//! Starting from the one-step model `{1}`, BUILD repeatedly adds the lag
//! whose refit model carries the most information about the next state
//! beyond the current model, as long as that gain survives a shuffle test.
//! PRUNE then drops lags whose contribution is statistically
//! indistinguishable from zero. All fits and information estimates share one
//! evaluation window of targets `y_m ..= y_{N_T}`, `m = eval_window_start`.

use std::collections::BTreeSet;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::dmd::{fit, LagSet, LaggedModel, DEFAULT_REL_SVD_TOL};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::info::{KsgEstimator, Permutation, SampleCloud, DEFAULT_K};
use crate::series::TimeSeries;

pub const DEFAULT_LOCAL_NEIGHBORS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErConfig {
    /// Maximum lag considered.
    pub d: usize,
    pub k_neighbors: usize,
    pub n_shuffles: usize,
    pub alpha: f64,
    /// Null model of the shuffle test. Defaults to a local permutation over
    /// the nearest current-model predictions, which tests conditional
    /// independence given the current model.
    pub permutation: Permutation,
    pub rel_svd_tol: f64,
    /// Stop BUILD once this many lags are chosen.
    pub max_lag_count: Option<usize>,
    pub seed: u64,
    /// First target index; defaults to `d`.
    pub eval_window_start: Option<usize>,
    pub execution: Execution,
}

impl Default for ErConfig {
    fn default() -> Self {
        Self {
            d: 10,
            k_neighbors: DEFAULT_K,
            n_shuffles: 100,
            alpha: 0.05,
            permutation: Permutation::Local {
                neighbors: DEFAULT_LOCAL_NEIGHBORS,
            },
            rel_svd_tol: DEFAULT_REL_SVD_TOL,
            max_lag_count: None,
            seed: 0,
            eval_window_start: None,
            execution: Execution::default(),
        }
    }
}

impl ErConfig {
    pub fn with_d(d: usize) -> Self {
        Self {
            d,
            ..Self::default()
        }
    }

    pub fn window_start(&self) -> usize {
        self.eval_window_start.unwrap_or(self.d)
    }

    fn estimator(&self) -> KsgEstimator {
        KsgEstimator::new(self.k_neighbors)
            .with_execution(self.execution)
            .with_permutation(self.permutation)
    }

    /// Checks the configuration against a series.
    pub fn validate(&self, ts: &TimeSeries) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Argument(format!(
                "maximum lag d must be at least 2, got {}",
                self.d
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Argument(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.k_neighbors == 0 {
            return Err(Error::Argument("k_neighbors must be positive".into()));
        }
        if let Permutation::Local { neighbors } = self.permutation {
            if neighbors < 2 {
                return Err(Error::Argument(format!(
                    "local permutation needs at least 2 neighbors, got {neighbors}"
                )));
            }
        }
        if self.n_shuffles < 20 {
            return Err(Error::Argument(format!(
                "need at least 20 shuffles, got {}",
                self.n_shuffles
            )));
        }
        let m = self.window_start();
        if m < self.d {
            return Err(Error::Argument(format!(
                "evaluation window start {m} is below d = {}",
                self.d
            )));
        }
        let last = ts.last_index();
        if m > last {
            return Err(Error::Argument(format!(
                "series ends at index {last}, before window start {m}"
            )));
        }
        let n = last - m + 1;
        let need = (2 * self.k_neighbors + 2).max(ts.state_dim());
        if n < need {
            return Err(Error::Samples(format!(
                "evaluation window holds {n} samples, need at least {need}"
            )));
        }
        Ok(())
    }
}

/// Current selection state: chosen lags, untried lags and the fitted model.
#[derive(Debug, Clone)]
pub struct ErState {
    pub chosen: LagSet,
    pub remaining: BTreeSet<usize>,
    pub model: LaggedModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Build,
    Prune,
}

/// One build or prune decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub phase: Phase,
    pub lag: usize,
    pub cmi: f64,
    pub quantile: f64,
    pub accepted: bool,
    pub lags_after: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErTrace {
    pub events: Vec<TraceEvent>,
}

impl ErTrace {
    /// Lag set obtained by applying every accepted event to `{1}`.
    pub fn replay(&self) -> Result<LagSet> {
        let mut lags = LagSet::unit();
        for e in self.events.iter().filter(|e| e.accepted) {
            lags = match e.phase {
                Phase::Build => lags.with(e.lag)?,
                Phase::Prune => lags.without(e.lag)?,
            };
        }
        Ok(lags)
    }
}

#[derive(Debug, Clone)]
pub struct ErResult {
    pub model: LaggedModel,
    pub lags: LagSet,
    pub trace: ErTrace,
}

/// Output of a single build or prune step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: ErState,
    pub event: Option<TraceEvent>,
    pub done: bool,
}

pub fn initialize(ts: &TimeSeries, cfg: &ErConfig) -> Result<ErState> {
    cfg.validate(ts)?;
    let model = fit(ts, &LagSet::unit(), cfg.window_start(), cfg.rel_svd_tol)?;
    Ok(ErState {
        chosen: LagSet::unit(),
        remaining: (2..=cfg.d).collect(),
        model,
    })
}

/// Window data shared by every candidate in a round.
struct Window {
    start: usize,
    n: usize,
    targets: SampleCloud,
}

impl Window {
    fn new(ts: &TimeSeries, cfg: &ErConfig) -> Result<Self> {
        let start = cfg.window_start();
        let n = ts.last_index() + 1 - start;
        let targets = SampleCloud::from_sample_columns(ts.data().subcols(start, n))?;
        Ok(Self { start, n, targets })
    }

    fn predictions(&self, ts: &TimeSeries, model: &LaggedModel) -> Result<SampleCloud> {
        let p: Mat<f64> = model.window_predictions(ts.data(), self.start, self.n);
        SampleCloud::from_sample_columns(p.as_ref())
    }
}

/// Seed for the shuffle test of decision number `round`.
fn round_seed(seed: u64, phase: Phase, round: usize) -> u64 {
    let tag = match phase {
        Phase::Build => 0x0b,
        Phase::Prune => 0x0f,
    };
    seed ^ (((round as u64) << 8) | tag).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// One BUILD iteration: try every remaining lag, keep the best if significant.
pub fn build_step(
    ts: &TimeSeries,
    cfg: &ErConfig,
    state: ErState,
    round: usize,
) -> Result<StepOutcome> {
    let at_cap = cfg
        .max_lag_count
        .is_some_and(|cap| state.chosen.len() >= cap);
    let window = Window::new(ts, cfg)?;
    let fits = ts.state_dim() * (state.chosen.len() + 1) <= window.n;
    if state.remaining.is_empty() || at_cap || !fits {
        return Ok(StepOutcome {
            state,
            event: None,
            done: true,
        });
    }
    let current = window.predictions(ts, &state.model)?;
    let candidates: Vec<usize> = state.remaining.iter().copied().collect();
    let est = cfg.estimator();
    let scored = cfg
        .execution
        .map(&candidates, |&lag| -> Result<(usize, f64, LaggedModel)> {
            let lags = state.chosen.with(lag)?;
            let model = fit(ts, &lags, window.start, cfg.rel_svd_tol)?;
            let pred = window.predictions(ts, &model)?;
            let cmi = est.conditional_mutual_information(&pred, &window.targets, &current)?;
            Ok((lag, cmi, model))
        });
    let mut best: Option<(usize, f64, LaggedModel)> = None;
    for r in scored {
        let r = r?;
        if best.as_ref().is_none_or(|b| r.1 > b.1) {
            best = Some(r);
        }
    }
    let (lag, _, model) = best.expect("at least one candidate");
    let pred = window.predictions(ts, &model)?;
    let sig = est.shuffle_significance(
        &pred,
        &window.targets,
        &current,
        cfg.n_shuffles,
        cfg.alpha,
        round_seed(cfg.seed, Phase::Build, round),
    )?;
    let mut state = state;
    if sig.significant {
        state.chosen = state.chosen.with(lag)?;
        state.remaining.remove(&lag);
        state.model = model;
    }
    let event = TraceEvent {
        phase: Phase::Build,
        lag,
        cmi: sig.observed_cmi,
        quantile: sig.shuffle_quantile,
        accepted: sig.significant,
        lags_after: state.chosen.as_slice().to_vec(),
    };
    let done = !sig.significant || state.remaining.is_empty();
    Ok(StepOutcome {
        state,
        event: Some(event),
        done,
    })
}

/// One PRUNE iteration: find the chosen lag whose removal loses the least
/// information and drop it if that loss is insignificant. Lag 1 stays.
pub fn prune_step(
    ts: &TimeSeries,
    cfg: &ErConfig,
    state: ErState,
    round: usize,
) -> Result<StepOutcome> {
    if state.chosen.len() < 2 {
        return Ok(StepOutcome {
            state,
            event: None,
            done: true,
        });
    }
    let window = Window::new(ts, cfg)?;
    let full = window.predictions(ts, &state.model)?;
    let candidates: Vec<usize> = state.chosen.iter().filter(|&l| l != 1).collect();
    let est = cfg.estimator();
    let scored = cfg.execution.map(
        &candidates,
        |&lag| -> Result<(usize, f64, LaggedModel, SampleCloud)> {
            let lags = state.chosen.without(lag)?;
            let model = fit(ts, &lags, window.start, cfg.rel_svd_tol)?;
            let reduced = window.predictions(ts, &model)?;
            let cmi = est.conditional_mutual_information(&full, &window.targets, &reduced)?;
            Ok((lag, cmi, model, reduced))
        },
    );
    let mut worst: Option<(usize, f64, LaggedModel, SampleCloud)> = None;
    for r in scored {
        let r = r?;
        if worst.as_ref().is_none_or(|w| r.1 < w.1) {
            worst = Some(r);
        }
    }
    let (lag, _, model, reduced) = worst.expect("at least one prunable lag");
    let sig = est.shuffle_significance(
        &full,
        &window.targets,
        &reduced,
        cfg.n_shuffles,
        cfg.alpha,
        round_seed(cfg.seed, Phase::Prune, round),
    )?;
    let mut state = state;
    let prune = !sig.significant;
    if prune {
        state.chosen = state.chosen.without(lag)?;
        state.model = model;
    }
    let event = TraceEvent {
        phase: Phase::Prune,
        lag,
        cmi: sig.observed_cmi,
        quantile: sig.shuffle_quantile,
        accepted: prune,
        lags_after: state.chosen.as_slice().to_vec(),
    };
    let done = !prune || state.chosen.len() < 2;
    Ok(StepOutcome {
        state,
        event: Some(event),
        done,
    })
}

/// Full INITIALIZE / BUILD / PRUNE run followed by a final refit on the
/// selected lags. Deterministic given `cfg.seed`.
pub fn run(ts: &TimeSeries, cfg: &ErConfig) -> Result<ErResult> {
    let mut state = initialize(ts, cfg)?;
    let mut trace = ErTrace::default();
    let mut round = 0;
    loop {
        let out = build_step(ts, cfg, state, round)?;
        round += 1;
        state = out.state;
        trace.events.extend(out.event);
        if out.done {
            break;
        }
    }
    loop {
        let out = prune_step(ts, cfg, state, round)?;
        round += 1;
        state = out.state;
        trace.events.extend(out.event);
        if out.done {
            break;
        }
    }
    let model = fit(ts, &state.chosen, cfg.window_start(), cfg.rel_svd_tol)?;
    Ok(ErResult {
        model,
        lags: state.chosen,
        trace,
    })
}
