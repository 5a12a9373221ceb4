use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] erdmd::Error),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("malformed file {path}: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("missing artifact {0}")]
    Missing(PathBuf),
}

impl CliError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                erdmd::Error::Dimension(_) => "dimension",
                erdmd::Error::LagUnderflow(_) => "lag_underflow",
                erdmd::Error::Underdetermined { .. } => "underdetermined",
                erdmd::Error::NonFinite(_) => "non_finite",
                erdmd::Error::TooLarge { .. } => "too_large",
                erdmd::Error::DegeneratePencil(_) => "degenerate_pencil",
                erdmd::Error::Argument(_) => "argument",
                erdmd::Error::Samples(_) => "samples",
                erdmd::Error::Divergence { .. } => "divergence",
                erdmd::Error::Rank { .. } => "rank",
                erdmd::Error::Numerical(_) => "numerical",
            },
            CliError::Io { .. } => "io",
            CliError::Json { .. } => "json",
            CliError::Config(_) => "config",
            CliError::Malformed { .. } => "malformed",
            CliError::Missing(_) => "missing",
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
