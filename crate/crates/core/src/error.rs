use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates an invariant. `key` is the dotted config path.
    #[error("invalid value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("failed to parse config {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("size mismatch: expected {expected} values, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A non-finite activation appeared. `seed` is set when the trial seed is known.
    #[error("integration diverged at step {step}{}", seed.map(|s| format!(" (trial seed {s})")).unwrap_or_default())]
    Diverged { step: u64, seed: Option<u64> },

    #[error("unknown experiment `{0}` (expected one of: fig6, fig7, fig12, conditions)")]
    UnknownExperiment(String),

    #[error("unknown plot kind `{0}` (expected one of: sweep_line, field_evolution_heatmap, surface_2d)")]
    UnknownPlotKind(String),

    #[error("unknown readout method `{0}` (expected one of: argmax, centroid, first-threshold)")]
    UnknownReadout(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
