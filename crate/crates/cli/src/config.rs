use std::path::{Path, PathBuf};

use erdmd::selection::ErConfig;
use erdmd::systems::{KsSpec, OdeSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io;

/// Checked-in experiment presets, addressable by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("lorenz_d150", include_str!("../presets/lorenz_d150.json")),
    ("lorenz_d100", include_str!("../presets/lorenz_d100.json")),
    (
        "rossler_d1000",
        include_str!("../presets/rossler_d1000.json"),
    ),
    ("ks_d200", include_str!("../presets/ks_d200.json")),
];

/// Where the analyzed series comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    Ode(OdeSpec),
    /// Kuramoto–Sivashinsky field reduced to its leading POD coefficients.
    KuramotoSivashinsky {
        ks: KsSpec,
        pod_modes: usize,
    },
    /// A series file in the CSV or JSON layout written by `simulate`.
    External {
        path: PathBuf,
    },
}

/// Closed time interval analyzed, in the time units of the series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t_start: f64,
    pub t_end: f64,
}

/// Reduced spectra to compute besides the full companion spectrum.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumConfig {
    /// Number of largest lags used for the inner approximation.
    pub inner_terms: Option<usize>,
    /// Largest lag kept in the outer approximation.
    pub outer_max_lag: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub system: SystemSpec,
    pub window: TimeWindow,
    pub erdmd: ErConfig,
    /// Also fit the all-lags minimum-norm baseline.
    #[serde(default)]
    pub baseline: bool,
    /// Closed-loop steps past the end of the window.
    #[serde(default)]
    pub forecast_steps: usize,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub format: Format,
}

impl ExperimentConfig {
    /// Loads a config from a file path, falling back to a preset name.
    pub fn load(arg: &str) -> Result<Self> {
        let path = Path::new(arg);
        if path.is_file() {
            return io::read_json(path);
        }
        match PRESETS.iter().find(|(name, _)| *name == arg) {
            Some((name, text)) => {
                Self::from_json(text).map_err(|e| CliError::Config(format!("preset {name}: {e}")))
            }
            None => Err(CliError::Config(format!(
                "{arg} is neither a file nor a preset (presets: {})",
                preset_names().join(", ")
            ))),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| CliError::Config(format!("unknown preset {name}")))
            .and_then(|(_, text)| {
                Self::from_json(text).map_err(|e| CliError::Config(e.to_string()))
            })
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Structural checks that do not need the data.
    pub fn validate(&self) -> Result<()> {
        let w = self.window;
        if !(w.t_start.is_finite() && w.t_end.is_finite() && w.t_start < w.t_end) {
            return Err(CliError::Config(format!(
                "window [{}, {}] is empty",
                w.t_start, w.t_end
            )));
        }
        if let SystemSpec::KuramotoSivashinsky { pod_modes, .. } = self.system {
            if pod_modes == 0 {
                return Err(CliError::Config("pod_modes must be positive".into()));
            }
        }
        Ok(())
    }
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}
