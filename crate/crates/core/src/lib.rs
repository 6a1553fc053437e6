//! Stochastic dynamic neural field model of voice-onset-time planning.
//!
//! A one-dimensional activation field over VOT (ms) receives a Gaussian target
//! input and a Gaussian minimal-pair competitor input. Inhibitory competitor
//! input pushes the selected peak away from the competitor (contrastive
//! hyperarticulation); excitatory input pulls it closer (a trace effect).
//!
//! - [`field`]: the integrator, interaction kernel and sigmoid gate
//! - [`stimulus`]: Gaussian inputs
//! - [`readout`]: VOT targets and threshold timing from finished runs
//! - [`experiments`]: batches, sweeps and named replication campaigns
//! - [`config`], [`report`], [`plot`]: TOML config, CSV and SVG output

pub mod config;
pub mod error;
pub mod experiments;
pub mod field;
pub mod noise;
pub mod plot;
pub mod readout;
pub mod report;
pub mod stimulus;

pub use config::{load_config, Range, RunConfig};
pub use error::{Error, Result};
pub use experiments::{
    replicate_named, run_batch, sweep_1d, sweep_2d, Condition, ConditionStats, Experiment, SweepResult,
};
pub use field::{FieldParams, FieldState, KernelTable};
pub use readout::{ReadoutMethod, TrialResult};
pub use stimulus::GaussianInput;
