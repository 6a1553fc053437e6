//! Turning a completed run into a VOT target and planning-time metrics.
//!
//! Three readouts are supported. `Argmax` always yields a value, even when no
//! neuron ever crosses threshold. The centroid and first-crossing readouts only
//! yield a value for runs in which some neuron exceeded threshold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::field::{Crossing, FieldState, RunSummary, THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMethod {
    #[default]
    Argmax,
    CentroidAboveThreshold,
    FirstToThreshold,
}

impl ReadoutMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ReadoutMethod::Argmax => "argmax",
            ReadoutMethod::CentroidAboveThreshold => "centroid_above_threshold",
            ReadoutMethod::FirstToThreshold => "first_to_threshold",
        }
    }
}

impl fmt::Display for ReadoutMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReadoutMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "argmax" => Ok(ReadoutMethod::Argmax),
            "centroid" | "centroid_above_threshold" => Ok(ReadoutMethod::CentroidAboveThreshold),
            "first_threshold" | "first_to_threshold" => Ok(ReadoutMethod::FirstToThreshold),
            _ => Err(Error::UnknownReadout(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Planned VOT (ms); absent when the method needs a stabilized field and there is none.
    pub vot_target: Option<f64>,
    /// First step at which any neuron exceeded threshold.
    pub time_to_threshold: Option<u64>,
    /// Whether any neuron is above threshold at the final step.
    pub stabilized: bool,
    pub readout_method: ReadoutMethod,
    pub seed: u64,
    pub final_state: FieldState,
}

/// Grid position of the highest activation; ties go to the lowest index.
pub fn readout_argmax(last: &FieldState) -> f64 {
    let mut best = 0;
    for (i, &v) in last.u.iter().enumerate() {
        if v > last.u[best] {
            best = i;
        }
    }
    best as f64
}

/// Activation-weighted mean position over above-threshold neurons.
pub fn readout_centroid(last: &FieldState) -> Option<f64> {
    let (weighted, mass) = last
        .u
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > THRESHOLD)
        .fold((0.0, 0.0), |(wx, m), (x, &v)| (wx + x as f64 * v, m + v));
    (mass > 0.0).then(|| weighted / mass)
}

/// Position and step of the first neuron to exceed threshold.
pub fn readout_first_threshold(trajectory: &[FieldState]) -> Option<(f64, u64)> {
    trajectory
        .iter()
        .find_map(Crossing::find)
        .map(|c| (c.position as f64, c.step))
}

/// Assembles a [`TrialResult`] from a run summary. Threshold timing and
/// stabilization are recorded whatever the method.
pub fn trial_metrics(run: &RunSummary, method: ReadoutMethod, seed: u64) -> TrialResult {
    let last = &run.final_state;
    let stabilized = last.count_above_threshold() > 0;
    let vot_target = match method {
        ReadoutMethod::Argmax => Some(readout_argmax(last)),
        ReadoutMethod::CentroidAboveThreshold => readout_centroid(last),
        ReadoutMethod::FirstToThreshold => run.first_crossing.map(|c| c.position as f64),
    };
    TrialResult {
        vot_target,
        time_to_threshold: run.first_crossing.map(|c| c.step),
        stabilized,
        readout_method: method,
        seed,
        final_state: last.clone(),
    }
}

/// Maximal runs of consecutive above-threshold neurons, as inclusive index ranges.
pub fn above_threshold_regions(state: &FieldState) -> Vec<(usize, usize)> {
    let mut regions = Vec::new();
    let mut start = None;
    for (i, &v) in state.u.iter().enumerate() {
        match (v > THRESHOLD, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                regions.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        regions.push((s, state.u.len() - 1));
    }
    regions
}
