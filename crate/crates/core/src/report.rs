//! CSV tables for sweeps, trials and trajectories.
//!
//! Floats are written with a fixed number of decimals using `.` as the decimal
//! point; missing values are empty fields.

use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{ConditionStats, SweepResult, TrialRecord};
use crate::field::FieldState;
use crate::readout::readout_argmax;

/// Column order of the per-condition sweep table.
pub const SWEEP_COLUMNS: [&str; 12] = [
    "a_target",
    "a_mp",
    "n_trials",
    "mean_vot",
    "sd_vot",
    "sem_vot",
    "skewness",
    "ch_ms",
    "frac_stabilized",
    "mean_time_to_threshold",
    "readout_method",
    "master_seed",
];

pub const DETAIL_COLUMNS: [&str; 11] = [
    "a_target",
    "a_mp",
    "n_valid",
    "mode_vot",
    "p10_vot",
    "ch_ms",
    "ch_vs_empirical_baseline",
    "median_time_to_threshold",
    "n_never_crossed",
    "frac_stabilized",
    "master_seed",
];

pub const TRIAL_COLUMNS: [&str; 7] = [
    "a_target",
    "a_mp",
    "trial",
    "seed",
    "vot_target",
    "time_to_threshold",
    "stabilized",
];

pub const TRAJECTORY_COLUMNS: [&str; 3] = ["step", "x", "u"];
pub const TRAJECTORY_SUMMARY_COLUMNS: [&str; 4] = ["step", "max_u", "n_above_threshold", "argmax"];

fn fixed(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.6}")
    }
}

fn param(v: f64) -> String {
    // shortest round-trip form; grid values like -1.5 stay readable
    format!("{v}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

struct Table {
    path: std::path::PathBuf,
    writer: csv::Writer<std::fs::File>,
}

impl Table {
    fn create(path: &Path, header: &[&str]) -> Result<Self> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut table = Table {
            path: path.to_path_buf(),
            writer: csv::Writer::from_writer(file),
        };
        table.row(header.iter().map(|s| s.to_string()))?;
        Ok(table)
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<()> {
        let record: Vec<String> = fields.into_iter().collect();
        self.writer.write_record(&record).map_err(|source| Error::Csv {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|e| Error::io(&self.path, e))
    }
}

fn sweep_row(c: &ConditionStats) -> Vec<String> {
    vec![
        param(c.condition.a_target),
        param(c.condition.a_mp),
        c.n_trials.to_string(),
        fixed(c.mean_vot),
        fixed(c.sd_vot),
        fixed(c.sem_vot),
        fixed(c.skewness),
        fixed(c.ch_ms),
        fixed(c.frac_stabilized),
        c.mean_time_to_threshold.map(fixed).unwrap_or_default(),
        c.readout_method.to_string(),
        c.master_seed.to_string(),
    ]
}

/// One row per condition, columns [`SWEEP_COLUMNS`].
pub fn emit_sweep_csv(result: &SweepResult, path: &Path) -> Result<()> {
    emit_cells_csv(&result.cells, path)
}

pub fn emit_cells_csv(cells: &[ConditionStats], path: &Path) -> Result<()> {
    let mut table = Table::create(path, &SWEEP_COLUMNS)?;
    for c in cells {
        table.row(sweep_row(c))?;
    }
    table.finish()
}

/// Diagnostics that do not belong in the fixed sweep schema.
pub fn emit_detail_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut table = Table::create(path, &DETAIL_COLUMNS)?;
    for c in &result.cells {
        table.row([
            param(c.condition.a_target),
            param(c.condition.a_mp),
            c.n_valid.to_string(),
            fixed(c.mode_vot),
            fixed(c.p10_vot),
            fixed(c.ch_ms),
            c.ch_vs_empirical_baseline.map(fixed).unwrap_or_default(),
            c.median_time_to_threshold.map(fixed).unwrap_or_default(),
            c.n_never_crossed.to_string(),
            fixed(c.frac_stabilized),
            c.master_seed.to_string(),
        ])?;
    }
    table.finish()
}

/// Per-trial VOT values (the scatter behind a sweep plot).
pub fn emit_trials_csv(trials: &[TrialRecord], path: &Path) -> Result<()> {
    let mut table = Table::create(path, &TRIAL_COLUMNS)?;
    for t in trials {
        table.row([
            param(t.condition.a_target),
            param(t.condition.a_mp),
            t.trial.to_string(),
            t.seed.to_string(),
            opt(t.vot_target),
            opt(t.time_to_threshold),
            u8::from(t.stabilized).to_string(),
        ])?;
    }
    table.finish()
}

/// Writes the long-format field (`step, x, u`) to `path` and the per-step
/// summary to `summary_path`.
pub fn emit_trajectory_csv(trajectory: &[FieldState], path: &Path, summary_path: &Path) -> Result<()> {
    let mut long = Table::create(path, &TRAJECTORY_COLUMNS)?;
    for state in trajectory {
        for (x, u) in state.u.iter().enumerate() {
            long.row([state.step.to_string(), x.to_string(), fixed(*u)])?;
        }
    }
    long.finish()?;

    let mut summary = Table::create(summary_path, &TRAJECTORY_SUMMARY_COLUMNS)?;
    for state in trajectory {
        summary.row([
            state.step.to_string(),
            fixed(state.max_activation()),
            state.count_above_threshold().to_string(),
            (readout_argmax(state) as usize).to_string(),
        ])?;
    }
    summary.finish()
}
