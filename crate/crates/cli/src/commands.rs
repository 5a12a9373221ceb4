//! The five subcommands. Each reads what it needs from the config and the
//! run directory and writes its artifacts there.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use erdmd::dmd::{
    fit_min_norm, full_spectrum, reduced_inner, reduced_outer, LagSet, LaggedModel, SpectrumSource,
};
use erdmd::selection::{self, ErTrace};
use erdmd::systems::{integrate_ks_etdrk4, integrate_rk4, pod_reduce, PodBasis};
use erdmd::TimeSeries;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SystemSpec};
use crate::error::{CliError, Result};
use crate::io::{self, Eigenvalue, Table};
use crate::svg;

pub const CONFIG_FILE: &str = "config.json";
pub const MODEL_FILE: &str = "model.json";
pub const BASELINE_FILE: &str = "baseline_model.json";
pub const TRACE_FILE: &str = "trace.json";
pub const FIT_FILE: &str = "fit.json";
pub const RECONSTRUCT_FILE: &str = "reconstruct.json";
pub const SPECTRUM_META_FILE: &str = "spectrum_meta.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMING_FILE: &str = "timing.json";
pub const POD_FILE: &str = "pod.json";

pub const ERDMD: &str = "erdmd";
pub const HODMD: &str = "hodmd";

/// Generated or loaded data for one experiment.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Analyzed variables over the whole available span.
    pub full: TimeSeries,
    pub labels: Vec<String>,
    /// Columns of `full` inside the analysis window.
    pub analysis: TimeSeries,
    /// Index of the first window column in `full`.
    pub start: usize,
    /// Spatial field and its POD basis, for field systems.
    pub field: Option<(TimeSeries, PodBasis)>,
}

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    cfg.validate()?;
    let (full, labels, field) = match &cfg.system {
        SystemSpec::Ode(spec) => {
            let ts = integrate_rk4(spec)?;
            let labels = ["x", "y", "z"]
                .iter()
                .map(|s| s.to_string())
                .chain((3..spec.y0.len()).map(|i| format!("y{i}")))
                .take(spec.y0.len())
                .collect();
            (ts, labels, None)
        }
        SystemSpec::KuramotoSivashinsky { ks, pod_modes } => {
            let field = integrate_ks_etdrk4(ks)?;
            let (basis, coeffs) = pod_reduce(&field, *pod_modes)?;
            let labels = (1..=*pod_modes).map(|i| format!("a{i}")).collect();
            (coeffs, labels, Some((field, basis)))
        }
        SystemSpec::External { path } => {
            let (ts, labels) = io::read_series(path)?;
            (ts, labels, None)
        }
    };
    let start = full.index_of(cfg.window.t_start)?;
    let end = full.index_of(cfg.window.t_end)?;
    let analysis = full.slice(start, end)?;
    if cfg.erdmd.d >= analysis.len() {
        return Err(CliError::Config(format!(
            "d = {} is not below the window length {}",
            cfg.erdmd.d,
            analysis.len()
        )));
    }
    Ok(Dataset {
        full,
        labels,
        analysis,
        start,
        field,
    })
}

fn field_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("u{i}")).collect()
}

/// Merges one stage's wall-clock time into the timing sidecar.
fn record_timing(out: &Path, stage: &str, started: Instant) -> Result<()> {
    let path = out.join(TIMING_FILE);
    let mut timing: BTreeMap<String, f64> = if path.is_file() {
        io::read_json(&path)?
    } else {
        BTreeMap::new()
    };
    timing.insert(stage.to_string(), started.elapsed().as_secs_f64());
    io::write_json(&path, &timing)
}

fn write_config(out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    io::write_json(&out.join(CONFIG_FILE), cfg)
}

/// Writes the analyzed series, plus the field and POD basis for field
/// systems.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Dataset> {
    let started = Instant::now();
    let data = load_dataset(cfg)?;
    write_config(out, cfg)?;
    io::write_series(
        &io::artifact(out, "series", cfg.format),
        &data.full,
        &data.labels,
    )?;
    if let Some((field, basis)) = &data.field {
        io::write_series(
            &io::artifact(out, "field", cfg.format),
            field,
            &field_labels(field.state_dim()),
        )?;
        io::write_json(&out.join(POD_FILE), basis)?;
    }
    info!(
        "simulated {} states x {} samples",
        data.full.state_dim(),
        data.full.len()
    );
    record_timing(out, "simulate", started)?;
    Ok(data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagNorm {
    pub lag: usize,
    pub norm: f64,
}

fn lag_norms(model: &LaggedModel) -> Vec<LagNorm> {
    model
        .lag_matrix_norms()
        .into_iter()
        .map(|(lag, norm)| LagNorm { lag, norm })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub lags: Vec<usize>,
    pub lag_norms: Vec<LagNorm>,
    pub seed: u64,
    /// Index (within the window) of the first fitted target.
    pub target_start: usize,
    pub training_residual: f64,
    pub baseline_lag_norms: Option<Vec<LagNorm>>,
}

/// Runs lag selection and, if configured, the all-lags baseline.
pub fn fit(cfg: &ExperimentConfig, out: &Path) -> Result<FitReport> {
    let started = Instant::now();
    let data = load_dataset(cfg)?;
    write_config(out, cfg)?;
    let result = selection::run(&data.analysis, &cfg.erdmd)?;
    let target_start = cfg.erdmd.window_start();
    info!("selected lags {}", result.lags);
    io::write_model(&out.join(MODEL_FILE), &result.model)?;
    io::write_json(&out.join(TRACE_FILE), &result.trace)?;
    let baseline_lag_norms = if cfg.baseline {
        let lags = LagSet::contiguous(cfg.erdmd.d)?;
        let baseline = fit_min_norm(&data.analysis, &lags, target_start, cfg.erdmd.rel_svd_tol)?;
        io::write_model(&out.join(BASELINE_FILE), &baseline)?;
        Some(lag_norms(&baseline))
    } else {
        None
    };
    let report = FitReport {
        lags: result.lags.as_slice().to_vec(),
        lag_norms: lag_norms(&result.model),
        seed: cfg.erdmd.seed,
        target_start,
        training_residual: result
            .model
            .training_residual(&data.analysis, target_start)?,
        baseline_lag_norms,
    };
    io::write_json(&out.join(FIT_FILE), &report)?;
    record_timing(out, "fit", started)?;
    Ok(report)
}

/// Error statistics of one closed-loop run; `None` marks a non-finite value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionStats {
    pub model: String,
    pub seed_end_time: f64,
    /// Reconstructed samples inside the window.
    pub reconstruction_samples: usize,
    /// Forecast samples past the window that have a reference value.
    pub forecast_samples: usize,
    pub max_abs_reconstruction: Vec<Option<f64>>,
    /// Absent when there are no forecast samples.
    pub max_abs_forecast: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructReport {
    pub models: Vec<ReconstructionStats>,
    pub warnings: Vec<String>,
}

/// Largest entry per column, `None` once a non-finite value appears.
fn column_max(rows: &[Vec<f64>], dim: usize) -> Vec<Option<f64>> {
    (0..dim)
        .map(|i| {
            rows.iter().try_fold(0.0f64, |m, r| {
                let v = r[i];
                v.is_finite().then(|| m.max(v))
            })
        })
        .collect()
}

/// Closed-loop reconstruction over the window plus the forecast tail, seeded
/// with the first `d` window samples, and the absolute error against the
/// reference data.
pub fn reconstruct(cfg: &ExperimentConfig, out: &Path) -> Result<ReconstructReport> {
    let started = Instant::now();
    let data = load_dataset(cfg)?;
    write_config(out, cfg)?;
    let mut models = vec![(ERDMD, io::read_model(&out.join(MODEL_FILE))?)];
    let baseline_path = out.join(BASELINE_FILE);
    if baseline_path.is_file() {
        models.push((HODMD, io::read_model(&baseline_path)?));
    }
    let seed_end = cfg.erdmd.window_start();
    let horizon = data.analysis.last_index();
    let s = data.analysis.state_dim();
    let mut report = ReconstructReport {
        models: Vec::new(),
        warnings: Vec::new(),
    };
    let available = data.full.last_index() - data.start;
    let with_truth = (horizon + cfg.forecast_steps).min(available);
    if with_truth < horizon + cfg.forecast_steps {
        let msg = format!(
            "forecast truncated to {} of {} steps: no reference data beyond t = {}",
            with_truth - horizon,
            cfg.forecast_steps,
            data.full.time(data.full.last_index())
        );
        warn!("{msg}");
        report.warnings.push(msg);
    }
    for (name, model) in &models {
        let rec = model.reconstruct(&data.analysis, seed_end, horizon, cfg.forecast_steps)?;
        let rec_data = rec.data();
        let full = data.full.data();
        let times: Vec<f64> = (seed_end..rec.len()).map(|j| rec.time(j)).collect();
        let rec_rows: Vec<Vec<f64>> = (seed_end..rec.len())
            .map(|j| (0..s).map(|i| rec_data[(i, j)]).collect())
            .collect();
        let err_rows: Vec<Vec<f64>> = (seed_end..=with_truth)
            .map(|j| {
                (0..s)
                    .map(|i| (rec_data[(i, j)] - full[(i, data.start + j)]).abs())
                    .collect()
            })
            .collect();
        let n_rec = horizon + 1 - seed_end;
        let labels: Vec<String> = data.labels.clone();
        Table {
            labels: labels.clone(),
            t: times.clone(),
            rows: rec_rows,
        }
        .write(&io::artifact(
            out,
            &format!("reconstruction_{name}"),
            cfg.format,
        ))?;
        Table {
            labels,
            t: times[..err_rows.len()].to_vec(),
            rows: err_rows.clone(),
        }
        .write(&io::artifact(out, &format!("error_{name}"), cfg.format))?;
        report.models.push(ReconstructionStats {
            model: name.to_string(),
            seed_end_time: data.analysis.time(seed_end),
            reconstruction_samples: n_rec,
            forecast_samples: err_rows.len() - n_rec,
            max_abs_reconstruction: column_max(&err_rows[..n_rec], s),
            max_abs_forecast: (err_rows.len() > n_rec).then(|| column_max(&err_rows[n_rec..], s)),
        });
    }
    io::write_json(&out.join(RECONSTRUCT_FILE), &report)?;
    record_timing(out, "reconstruct", started)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    /// Radius of the reference circle drawn with the eigenvalues.
    pub unit_circle_radius: f64,
    pub counts: BTreeMap<String, usize>,
    pub max_modulus: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Full companion spectrum of the selected model plus the configured
/// reduced approximations. A reduction that does not apply to the selected
/// lags is skipped with a warning.
pub fn spectrum(cfg: &ExperimentConfig, out: &Path) -> Result<(Vec<Eigenvalue>, SpectrumMeta)> {
    let started = Instant::now();
    write_config(out, cfg)?;
    let model = io::read_model(&out.join(MODEL_FILE))?;
    let mut results = vec![full_spectrum(&model)?];
    let mut warnings = Vec::new();
    if let Some(n) = cfg.spectrum.inner_terms {
        match reduced_inner(&model, n) {
            Ok(r) => results.push(r),
            Err(e) => warnings.push(format!("inner approximation skipped: {e}")),
        }
    }
    if let Some(m) = cfg.spectrum.outer_max_lag {
        match reduced_outer(&model, m) {
            Ok(r) => results.push(r),
            Err(e) => warnings.push(format!("outer approximation skipped: {e}")),
        }
    }
    for w in &warnings {
        warn!("{w}");
    }
    let values: Vec<Eigenvalue> = results
        .iter()
        .flat_map(|r| r.eigenvalues.iter().map(|&z| Eigenvalue::new(z, r.source)))
        .collect();
    let mut counts = BTreeMap::new();
    let mut max_modulus = BTreeMap::new();
    for e in &values {
        let key = e.source.as_str().to_string();
        *counts.entry(key.clone()).or_insert(0) += 1;
        let m = max_modulus.entry(key).or_insert(0.0f64);
        *m = m.max(e.modulus());
    }
    let meta = SpectrumMeta {
        unit_circle_radius: 1.0,
        counts,
        max_modulus,
        warnings,
    };
    io::write_eigenvalues(&io::artifact(out, "eigenvalues", cfg.format), &values)?;
    io::write_json(&out.join(SPECTRUM_META_FILE), &meta)?;
    record_timing(out, "spectrum", started)?;
    Ok((values, meta))
}

/// Error curves of one model, per state dimension; `None` marks a
/// non-finite value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurves {
    pub model: String,
    pub labels: Vec<String>,
    pub t: Vec<f64>,
    pub abs_error: Vec<Vec<Option<f64>>>,
}

/// Everything a run produced, in one deterministic document. Wall-clock
/// times live in the sidecar named by `timing_file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub lags: Option<Vec<usize>>,
    pub lag_norms: Option<Vec<LagNorm>>,
    pub baseline_lag_norms: Option<Vec<LagNorm>>,
    pub trace: Option<ErTrace>,
    pub reconstruction: Vec<ReconstructionStats>,
    pub errors: Vec<ErrorCurves>,
    pub eigenvalues: Vec<Eigenvalue>,
    pub spectrum: Option<SpectrumMeta>,
    pub timing_file: Option<String>,
    pub warnings: Vec<String>,
}

fn optional<T>(result: Result<T>, warnings: &mut Vec<String>) -> Result<Option<T>> {
    match result {
        Ok(v) => Ok(Some(v)),
        Err(CliError::Missing(p)) => {
            let name = p.file_name().map_or_else(
                || p.display().to_string(),
                |n| n.to_string_lossy().into_owned(),
            );
            warnings.push(format!("partial summary: {name} not found"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Collects the artifacts of a run directory into `summary.json`, and
/// optionally writes SVG quick-look plots.
pub fn report(out: &Path, with_svg: bool) -> Result<RunSummary> {
    let config: ExperimentConfig = io::read_json(&out.join(CONFIG_FILE))?;
    let mut warnings = Vec::new();
    let model = optional(io::read_model(&out.join(MODEL_FILE)), &mut warnings)?;
    let baseline = if config.baseline {
        optional(io::read_model(&out.join(BASELINE_FILE)), &mut warnings)?
    } else {
        None
    };
    let trace = optional(
        io::read_json::<ErTrace>(&out.join(TRACE_FILE)),
        &mut warnings,
    )?;
    let recon = optional(
        io::read_json::<ReconstructReport>(&out.join(RECONSTRUCT_FILE)),
        &mut warnings,
    )?;
    let mut errors = Vec::new();
    let mut reconstruction = Vec::new();
    if let Some(r) = recon {
        warnings.extend(r.warnings);
        for stats in r.models {
            let stem = format!("error_{}", stats.model);
            match io::find_artifact(out, &stem) {
                Some(path) => {
                    let table = Table::read(&path)?;
                    errors.push(ErrorCurves {
                        model: stats.model.clone(),
                        abs_error: (0..table.labels.len())
                            .map(|i| {
                                table
                                    .column(i)
                                    .into_iter()
                                    .map(|v| v.is_finite().then_some(v))
                                    .collect()
                            })
                            .collect(),
                        labels: table.labels,
                        t: table.t,
                    });
                }
                None => warnings.push(format!("partial summary: {stem} not found")),
            }
            reconstruction.push(stats);
        }
    }
    let eigenvalues = match io::find_artifact(out, "eigenvalues") {
        Some(path) => io::read_eigenvalues(&path)?,
        None => {
            warnings.push("partial summary: eigenvalues not found".into());
            Vec::new()
        }
    };
    let spectrum = optional(
        io::read_json::<SpectrumMeta>(&out.join(SPECTRUM_META_FILE)),
        &mut warnings,
    )?;
    let summary = RunSummary {
        name: config.name.clone(),
        seed: config.erdmd.seed,
        lags: model.as_ref().map(|m| m.lags().as_slice().to_vec()),
        lag_norms: model.as_ref().map(lag_norms),
        baseline_lag_norms: baseline.as_ref().map(lag_norms),
        trace,
        reconstruction,
        errors,
        eigenvalues,
        spectrum,
        timing_file: out
            .join(TIMING_FILE)
            .is_file()
            .then(|| TIMING_FILE.to_string()),
        warnings,
        config,
    };
    io::write_json(&out.join(SUMMARY_FILE), &summary)?;
    if with_svg {
        if !summary.errors.is_empty() {
            io::write_text(&out.join("error.svg"), &svg::error_plot(&summary.errors))?;
        }
        if !summary.eigenvalues.is_empty() {
            io::write_text(
                &out.join("spectrum.svg"),
                &svg::spectrum_plot(&summary.eigenvalues),
            )?;
        }
    }
    Ok(summary)
}

/// `simulate`, `fit`, `reconstruct`, `spectrum` and `report` in sequence.
pub fn pipeline(cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    simulate(cfg, out)?;
    fit(cfg, out)?;
    reconstruct(cfg, out)?;
    spectrum(cfg, out)?;
    report(out, false)
}

/// Sources present in a spectrum, in a fixed order.
pub fn sources(values: &[Eigenvalue]) -> Vec<SpectrumSource> {
    [
        SpectrumSource::FullCompanion,
        SpectrumSource::ReducedInner,
        SpectrumSource::ReducedOuter,
    ]
    .into_iter()
    .filter(|s| values.iter().any(|e| e.source == *s))
    .collect()
}
