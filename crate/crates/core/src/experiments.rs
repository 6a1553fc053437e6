//! Batch and sweep runners over (target amplitude, competitor amplitude) conditions.
//!
//! Trial `i` of any batch draws its noise from `trial_seed(master_seed, i)`, so
//! every cell of a sweep sees the same noise realizations and results do not
//! depend on the number of worker threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Range, RunConfig};
use crate::error::{Error, Result};
use crate::field::{evolve, evolve_summary_with, FieldParams, FieldState, Integrator};
use crate::noise::{trial_seed, TrialNoise, ZeroNoise};
use crate::readout::{trial_metrics, ReadoutMethod, TrialResult};
use crate::stimulus::compose_inputs;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub a_target: f64,
    pub a_mp: f64,
}

impl Condition {
    pub fn new(a_target: f64, a_mp: f64) -> Self {
        Condition { a_target, a_mp }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a_target={} a_mp={}", self.a_target, self.a_mp)
    }
}

/// Summary statistics of one batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionStats {
    pub condition: Condition,
    pub n_trials: usize,
    /// Trials that produced a VOT value under the readout method.
    pub n_valid: usize,
    pub mean_vot: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd_vot: f64,
    pub sem_vot: f64,
    /// Moment skewness `m3 / m2^1.5`.
    pub skewness: f64,
    /// Most frequent VOT value, rounded to the grid.
    pub mode_vot: f64,
    /// 10th percentile of the VOT distribution.
    pub p10_vot: f64,
    /// `mean_vot - p_target`.
    pub ch_ms: f64,
    /// `mean_vot` minus the mean of the zero-competitor cell at the same target
    /// amplitude, when the sweep contains one.
    pub ch_vs_empirical_baseline: Option<f64>,
    pub frac_stabilized: f64,
    pub mean_time_to_threshold: Option<f64>,
    pub median_time_to_threshold: Option<f64>,
    /// Trials in which no neuron ever exceeded threshold.
    pub n_never_crossed: usize,
    pub readout_method: ReadoutMethod,
    pub master_seed: u64,
}

/// One trial, reduced to the scalars written to the per-trial table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub condition: Condition,
    pub trial: usize,
    pub seed: u64,
    pub vot_target: Option<f64>,
    pub time_to_threshold: Option<u64>,
    pub stabilized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// One entry per grid cell, in run order.
    pub cells: Vec<ConditionStats>,
    pub trials: Vec<TrialRecord>,
    pub master_seed: u64,
    pub config: RunConfig,
}

impl SweepResult {
    pub fn cell(&self, a_target: f64, a_mp: f64) -> Option<&ConditionStats> {
        self.cells
            .iter()
            .find(|c| c.condition.a_target == a_target && c.condition.a_mp == a_mp)
    }
}

/// Summed external input for a condition: target and competitor with the
/// condition's amplitudes, everything else from `base`.
pub fn condition_inputs(base: &RunConfig, condition: Condition) -> Result<Vec<f64>> {
    compose_inputs(
        &[
            base.target.with_amplitude(condition.a_target),
            base.competitor.with_amplitude(condition.a_mp),
        ],
        base.field.field_size,
    )
}

/// Runs `n_trials` independent trials and returns them in trial-index order.
pub fn run_trials(
    base: &RunConfig,
    condition: Condition,
    n_trials: usize,
    master_seed: u64,
    method: ReadoutMethod,
) -> Result<Vec<TrialResult>> {
    let inputs = condition_inputs(base, condition)?;
    let prototype = Integrator::new(&base.field, &inputs)?;
    (0..n_trials)
        .into_par_iter()
        .map_init(
            || prototype.clone(),
            |integrator, i| {
                let seed = trial_seed(master_seed, i as u64);
                let mut noise = TrialNoise::new(seed);
                let initial = FieldState::initial(&base.field);
                let run = evolve_summary_with(integrator, initial, &mut noise).map_err(|e| match e {
                    Error::Diverged { step, .. } => Error::Diverged { step, seed: Some(seed) },
                    other => other,
                })?;
                Ok(trial_metrics(&run, method, seed))
            },
        )
        .collect()
}

/// Aggregates trials of one condition. CH is measured against `p_target`.
pub fn aggregate(
    condition: Condition,
    p_target: f64,
    method: ReadoutMethod,
    master_seed: u64,
    trials: &[TrialResult],
) -> ConditionStats {
    let vots: Vec<f64> = trials.iter().filter_map(|t| t.vot_target).collect();
    let n = vots.len();
    let nf = n as f64;
    let mean = if n > 0 { vots.iter().sum::<f64>() / nf } else { f64::NAN };
    let m2 = vots.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let m3 = vots.iter().map(|v| (v - mean).powi(3)).sum::<f64>();
    let sd = if n > 1 { (m2 / (nf - 1.0)).sqrt() } else if n == 1 { 0.0 } else { f64::NAN };
    let sem = if n > 0 { sd / nf.sqrt() } else { f64::NAN };
    let skewness = if n > 0 && m2 > 0.0 { (m3 / nf) / (m2 / nf).powf(1.5) } else { 0.0 };

    let mut crossings: Vec<u64> = trials.iter().filter_map(|t| t.time_to_threshold).collect();
    crossings.sort_unstable();
    let mean_ttt = (!crossings.is_empty()).then(|| crossings.iter().sum::<u64>() as f64 / crossings.len() as f64);

    let stabilized = trials.iter().filter(|t| t.stabilized).count();
    ConditionStats {
        condition,
        n_trials: trials.len(),
        n_valid: n,
        mean_vot: mean,
        sd_vot: sd,
        sem_vot: sem,
        skewness,
        mode_vot: mode(&vots),
        p10_vot: quantile(&vots, 0.1),
        ch_ms: mean - p_target,
        ch_vs_empirical_baseline: None,
        frac_stabilized: stabilized as f64 / trials.len().max(1) as f64,
        mean_time_to_threshold: mean_ttt,
        median_time_to_threshold: median_u64(&crossings),
        n_never_crossed: trials.len() - crossings.len(),
        readout_method: method,
        master_seed,
    }
}

fn mode(values: &[f64]) -> f64 {
    let mut rounded: Vec<i64> = values.iter().map(|v| v.round() as i64).collect();
    rounded.sort_unstable();
    let mut best = (f64::NAN, 0usize);
    for chunk in rounded.chunk_by(|a, b| a == b) {
        if chunk.len() > best.1 {
            best = (chunk[0] as f64, chunk.len());
        }
    }
    best.0
}

// Linear interpolation between order statistics.
fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn median_u64(sorted: &[u64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2] as f64),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0),
    }
}

pub fn run_batch(
    base: &RunConfig,
    condition: Condition,
    n_trials: usize,
    master_seed: u64,
    method: ReadoutMethod,
) -> Result<ConditionStats> {
    if n_trials == 0 {
        return Err(Error::config("n_trials", "must be >= 1"));
    }
    let trials = run_trials(base, condition, n_trials, master_seed, method)?;
    Ok(aggregate(condition, base.target.p, method, master_seed, &trials))
}

/// Runs every condition in order and fills in the empirical-baseline CH where possible.
pub fn run_conditions(
    base: &RunConfig,
    conditions: &[Condition],
    n_trials: usize,
    master_seed: u64,
    method: ReadoutMethod,
) -> Result<SweepResult> {
    if n_trials == 0 {
        return Err(Error::config("n_trials", "must be >= 1"));
    }
    let mut cells = Vec::with_capacity(conditions.len());
    let mut records = Vec::with_capacity(conditions.len() * n_trials);
    for &condition in conditions {
        let trials = run_trials(base, condition, n_trials, master_seed, method)?;
        records.extend(trials.iter().enumerate().map(|(i, t)| TrialRecord {
            condition,
            trial: i,
            seed: t.seed,
            vot_target: t.vot_target,
            time_to_threshold: t.time_to_threshold,
            stabilized: t.stabilized,
        }));
        let stats = aggregate(condition, base.target.p, method, master_seed, &trials);
        log::info!(
            "{condition}: mean VOT {:.2} ms, CH {:+.2} ms, stabilized {:.1}%",
            stats.mean_vot,
            stats.ch_ms,
            100.0 * stats.frac_stabilized
        );
        cells.push(stats);
    }
    let baselines: Vec<(f64, f64)> = cells
        .iter()
        .filter(|c| c.condition.a_mp == 0.0)
        .map(|c| (c.condition.a_target, c.mean_vot))
        .collect();
    for cell in &mut cells {
        cell.ch_vs_empirical_baseline = baselines
            .iter()
            .find(|(a, _)| *a == cell.condition.a_target)
            .map(|(_, mean)| cell.mean_vot - mean);
    }
    Ok(SweepResult {
        cells,
        trials: records,
        master_seed,
        config: base.clone(),
    })
}

/// Competitor-amplitude sweep at the base target amplitude.
pub fn sweep_1d(
    base: &RunConfig,
    a_mp: Range,
    n_trials: usize,
    master_seed: u64,
    method: ReadoutMethod,
) -> Result<SweepResult> {
    a_mp.validate("sweep.one_d.a_mp")?;
    let conditions: Vec<Condition> = a_mp
        .values()
        .into_iter()
        .map(|mp| Condition::new(base.target.a, mp))
        .collect();
    run_conditions(base, &conditions, n_trials, master_seed, method)
}

/// Full grid over target and competitor amplitudes, target amplitude outermost.
pub fn sweep_2d(
    base: &RunConfig,
    a_mp: Range,
    a_target: Range,
    n_trials: usize,
    master_seed: u64,
    method: ReadoutMethod,
) -> Result<SweepResult> {
    a_mp.validate("sweep.two_d.a_mp")?;
    a_target.validate("sweep.two_d.a_target")?;
    let mp_values = a_mp.values();
    let conditions: Vec<Condition> = a_target
        .values()
        .into_iter()
        .flat_map(|t| mp_values.iter().map(move |&mp| Condition::new(t, mp)))
        .collect();
    run_conditions(base, &conditions, n_trials, master_seed, method)
}

/// Named replication campaigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Competitor-amplitude sweep.
    Fig6,
    /// Example field evolutions in the three classic conditions.
    Fig7,
    /// Target x competitor amplitude grid.
    Fig12,
    /// No competitor / pseudoword / no context / context conditions.
    Conditions,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig6 => "fig6",
            Experiment::Fig7 => "fig7",
            Experiment::Fig12 => "fig12",
            Experiment::Conditions => "conditions",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig6" => Ok(Experiment::Fig6),
            "fig7" => Ok(Experiment::Fig7),
            "fig12" => Ok(Experiment::Fig12),
            "conditions" | "conditions_bbg2009" => Ok(Experiment::Conditions),
            other => Err(Error::UnknownExperiment(other.to_string())),
        }
    }
}

/// Named competitor conditions at the base target amplitude.
pub const NAMED_CONDITIONS: [(&str, f64); 4] = [
    ("no_competitor", 0.0),
    ("pseudoword", -1.5),
    ("no_context", -3.0),
    ("context", -6.0),
];

/// A full trajectory kept for export.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleRun {
    pub label: String,
    pub condition: Condition,
    /// Noise seed, or `None` for a noiseless run.
    pub seed: Option<u64>,
    pub params: FieldParams,
    pub trajectory: Vec<FieldState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub experiment: Experiment,
    pub sweep: SweepResult,
    pub examples: Vec<ExampleRun>,
}

/// Full trajectory of trial 0 of a condition's batch, or its noiseless counterpart.
pub fn example_run(
    base: &RunConfig,
    label: &str,
    condition: Condition,
    master_seed: u64,
    noisy: bool,
) -> Result<ExampleRun> {
    let inputs = condition_inputs(base, condition)?;
    let (params, seed, trajectory) = if noisy {
        let seed = trial_seed(master_seed, 0);
        let traj = evolve(FieldState::initial(&base.field), &inputs, &base.field, &mut TrialNoise::new(seed))?;
        (base.field.clone(), Some(seed), traj)
    } else {
        let params = FieldParams { q: 0.0, ..base.field.clone() };
        let traj = evolve(FieldState::initial(&params), &inputs, &params, &mut ZeroNoise)?;
        (params, None, traj)
    };
    Ok(ExampleRun {
        label: label.to_string(),
        condition,
        seed,
        params,
        trajectory,
    })
}

pub fn replicate_named(
    experiment: Experiment,
    base: &RunConfig,
    n_trials: usize,
    master_seed: u64,
    method: ReadoutMethod,
) -> Result<Replication> {
    let a_target = base.target.a;
    let highlighted = [("no_competitor", 0.0), ("no_context", -3.0), ("context", -6.0)];
    let named = |pairs: &[(&str, f64)]| -> Vec<(String, Condition)> {
        pairs
            .iter()
            .map(|(label, mp)| (label.to_string(), Condition::new(a_target, *mp)))
            .collect()
    };
    let (sweep, example_conditions, with_noiseless) = match experiment {
        Experiment::Fig6 => (
            sweep_1d(base, base.sweep.one_d.a_mp, n_trials, master_seed, method)?,
            named(&highlighted),
            false,
        ),
        Experiment::Fig7 => {
            let conds = named(&highlighted);
            let list: Vec<Condition> = conds.iter().map(|(_, c)| *c).collect();
            (run_conditions(base, &list, n_trials, master_seed, method)?, conds, true)
        }
        Experiment::Fig12 => {
            let mp = base.sweep.two_d.a_mp;
            let tg = base.sweep.two_d.a_target;
            let corners = [
                ("strong_inhibition_weak_target", Condition::new(tg.lo, mp.lo)),
                ("strong_inhibition_strong_target", Condition::new(tg.hi, mp.lo)),
                ("strong_excitation_weak_target", Condition::new(tg.lo, mp.hi)),
                ("strong_excitation_strong_target", Condition::new(tg.hi, mp.hi)),
            ];
            (
                sweep_2d(base, mp, tg, n_trials, master_seed, method)?,
                corners.iter().map(|(l, c)| (l.to_string(), *c)).collect(),
                false,
            )
        }
        Experiment::Conditions => {
            let conds = named(&NAMED_CONDITIONS);
            let list: Vec<Condition> = conds.iter().map(|(_, c)| *c).collect();
            (run_conditions(base, &list, n_trials, master_seed, method)?, conds, false)
        }
    };
    let mut examples = Vec::new();
    for (label, condition) in &example_conditions {
        examples.push(example_run(base, label, *condition, master_seed, true)?);
        if with_noiseless {
            examples.push(example_run(base, &format!("{label}_noiseless"), *condition, master_seed, false)?);
        }
    }
    Ok(Replication {
        experiment,
        sweep,
        examples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldState;

    fn result(vot: Option<f64>, ttt: Option<u64>, stabilized: bool) -> TrialResult {
        TrialResult {
            vot_target: vot,
            time_to_threshold: ttt,
            stabilized,
            readout_method: ReadoutMethod::Argmax,
            seed: 0,
            final_state: FieldState { u: vec![], step: 0 },
        }
    }

    #[test]
    fn aggregate_statistics() {
        let trials = vec![
            result(Some(70.0), Some(40), true),
            result(Some(72.0), Some(44), true),
            result(Some(70.0), None, false),
            result(Some(78.0), Some(41), true),
        ];
        let s = aggregate(Condition::new(6.0, -3.0), 70.0, ReadoutMethod::Argmax, 1, &trials);
        assert_eq!(s.n_trials, 4);
        assert_eq!(s.n_valid, 4);
        assert_eq!(s.mean_vot, 72.5);
        assert_eq!(s.ch_ms, s.mean_vot - 70.0);
        // sample sd of [70, 72, 70, 78]: sqrt(43 / 3)
        assert!((s.sd_vot - (43.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((s.sem_vot - s.sd_vot / 2.0).abs() < 1e-12);
        // m2 / n = 10.75, m3 / n = (-2.5^3 * 2 + -0.5^3 + 5.5^3) / 4
        let m3 = (2.0 * (-2.5f64).powi(3) + (-0.5f64).powi(3) + 5.5f64.powi(3)) / 4.0;
        assert!((s.skewness - m3 / 10.75f64.powf(1.5)).abs() < 1e-12);
        assert_eq!(s.mode_vot, 70.0);
        assert_eq!(s.frac_stabilized, 0.75);
        assert_eq!(s.mean_time_to_threshold, Some(125.0 / 3.0));
        assert_eq!(s.median_time_to_threshold, Some(41.0));
        assert_eq!(s.n_never_crossed, 1);
    }

    #[test]
    fn aggregate_excludes_missing_targets() {
        let trials = vec![result(Some(80.0), Some(90), true), result(None, None, false)];
        let s = aggregate(Condition::new(6.0, -6.0), 70.0, ReadoutMethod::CentroidAboveThreshold, 1, &trials);
        assert_eq!(s.n_valid, 1);
        assert_eq!(s.mean_vot, 80.0);
        assert_eq!(s.sd_vot, 0.0);
        assert_eq!(s.frac_stabilized, 0.5);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5), 3.0);
        assert!((quantile(&[0.0, 10.0], 0.1) - 1.0).abs() < 1e-12);
        assert!(quantile(&[], 0.1).is_nan());
    }

    #[test]
    fn experiment_names() {
        assert_eq!("fig6".parse::<Experiment>().unwrap(), Experiment::Fig6);
        assert_eq!("conditions_bbg2009".parse::<Experiment>().unwrap(), Experiment::Conditions);
        assert!(matches!("fig9".parse::<Experiment>(), Err(Error::UnknownExperiment(_))));
    }

    #[test]
    fn zero_trials_rejected() {
        let base = RunConfig::default();
        assert!(run_batch(&base, Condition::new(6.0, 0.0), 0, 1, ReadoutMethod::Argmax).is_err());
    }

    #[test]
    fn degenerate_sweep_equals_batch() {
        let base = RunConfig::default();
        let sweep = sweep_1d(&base, Range::single(-3.0), 8, 5, ReadoutMethod::Argmax).unwrap();
        let batch = run_batch(&base, Condition::new(6.0, -3.0), 8, 5, ReadoutMethod::Argmax).unwrap();
        assert_eq!(sweep.cells.len(), 1);
        assert_eq!(sweep.cells[0], batch);
        assert_eq!(sweep.trials.len(), 8);
    }

    #[test]
    fn empirical_baseline_is_filled_for_zero_competitor_rows() {
        let base = RunConfig::default();
        let sweep = sweep_1d(&base, Range { lo: -1.0, hi: 0.0, step: 1.0 }, 4, 3, ReadoutMethod::Argmax).unwrap();
        let zero = sweep.cell(6.0, 0.0).unwrap();
        assert_eq!(zero.ch_vs_empirical_baseline, Some(0.0));
        let other = sweep.cell(6.0, -1.0).unwrap();
        assert_eq!(other.ch_vs_empirical_baseline, Some(other.mean_vot - zero.mean_vot));
    }
}
