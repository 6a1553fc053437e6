//! Discretized stochastic integrator for the one-dimensional activation field.
//!
//! The field lives on an integer grid `x = 0..field_size` with unit spacing
//! (one neuron per millisecond of VOT). Each forward-Euler step computes
//!
//! ```text
//! u' = u + (dt / tau) * (-u + h + s(x) + sum_x' k(x - x') g(u(x')) + q * xi(x))
//! ```
//!
//! where `s` is the summed external input, `k` the lateral interaction kernel,
//! `g` the sigmoid gate and `xi` standard normal noise. Noise enters inside the
//! bracket, so its per-step increment is `(dt / tau) * q * xi`. This is not a
//! `sqrt(dt)`-scaled Euler-Maruyama scheme: changing `dt` changes the noise
//! process, not just the resolution.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseSource;

/// Activation above which a neuron counts as "above threshold".
pub const THRESHOLD: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldParams {
    pub tau: f64,
    /// Resting level.
    pub h: f64,
    /// Sigmoid steepness.
    pub beta: f64,
    pub c_exc: f64,
    pub c_inh: f64,
    /// Global inhibition contributed by each above-threshold neuron.
    pub c_glob: f64,
    pub sigma_exc: f64,
    pub sigma_inh: f64,
    /// Noise weight.
    pub q: f64,
    pub field_size: usize,
    pub dt: f64,
    pub n_steps: usize,
    /// Starting activation for every neuron; the resting level `h` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_level: Option<f64>,
    /// Width of a normalized Gaussian used to smooth the per-step noise.
    /// Zero means spatially uncorrelated noise.
    #[serde(default)]
    pub noise_smoothing: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        crate::config::RunConfig::default().field
    }
}

impl FieldParams {
    /// Checks hard invariants. Keys in errors are dotted config paths.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tau", self.tau),
            ("beta", self.beta),
            ("sigma_exc", self.sigma_exc),
            ("sigma_inh", self.sigma_inh),
            ("dt", self.dt),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("field.{key}"), format!("must be finite and > 0, got {v}")));
            }
        }
        let nonneg = [
            ("c_exc", self.c_exc),
            ("c_inh", self.c_inh),
            ("c_glob", self.c_glob),
            ("q", self.q),
            ("noise_smoothing", self.noise_smoothing),
        ];
        for (key, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("field.{key}"), format!("must be finite and >= 0, got {v}")));
            }
        }
        if !self.h.is_finite() {
            return Err(Error::config("field.h", format!("must be finite, got {}", self.h)));
        }
        if let Some(level) = self.initial_level {
            if !level.is_finite() {
                return Err(Error::config("field.initial_level", format!("must be finite, got {level}")));
            }
        }
        if self.field_size < 2 {
            return Err(Error::config("field.field_size", format!("must be >= 2, got {}", self.field_size)));
        }
        if self.n_steps == 0 {
            return Err(Error::config("field.n_steps", "must be >= 1"));
        }
        Ok(())
    }

    /// Soft checks for the selection regime (`sigma_exc < sigma_inh`,
    /// `c_exc > c_inh > c_glob`). Returns one message per violated relation.
    pub fn regime_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.sigma_exc >= self.sigma_inh {
            out.push(format!(
                "sigma_exc ({}) >= sigma_inh ({}): no surround inhibition",
                self.sigma_exc, self.sigma_inh
            ));
        }
        if !(self.c_exc > self.c_inh && self.c_inh > self.c_glob) {
            out.push(format!(
                "expected c_exc > c_inh > c_glob, got {} / {} / {}",
                self.c_exc, self.c_inh, self.c_glob
            ));
        }
        out
    }

    pub fn resting_level(&self) -> f64 {
        self.initial_level.unwrap_or(self.h)
    }
}

/// Activation of every neuron at one time index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub step: u64,
}

impl FieldState {
    /// Uniform field at the configured starting level, step 0.
    pub fn initial(params: &FieldParams) -> Self {
        FieldState {
            u: vec![params.resting_level(); params.field_size],
            step: 0,
        }
    }

    pub fn max_activation(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn count_above_threshold(&self) -> usize {
        self.u.iter().filter(|&&v| v > THRESHOLD).count()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|v| v.is_finite())
    }
}

/// Sigmoid gate `1 / (1 + exp(-beta * u))`, evaluated without overflow.
pub fn sigmoid_gate(u: f64, beta: f64) -> f64 {
    let z = beta * u;
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Interaction weight at displacement `d`: local excitation minus broader
/// inhibition minus a global constant.
pub fn kernel_value(d: f64, params: &FieldParams) -> f64 {
    let norm = (2.0 * PI).sqrt();
    let d2 = d * d;
    let exc = params.c_exc / (norm * params.sigma_exc) * (-d2 / (2.0 * params.sigma_exc * params.sigma_exc)).exp();
    let inh = params.c_inh / (norm * params.sigma_inh) * (-d2 / (2.0 * params.sigma_inh * params.sigma_inh)).exp();
    exc - inh - params.c_glob
}

/// Kernel weights for every integer displacement in `-(n-1)..=(n-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    weights: Vec<f64>,
    field_size: usize,
}

impl KernelTable {
    pub fn field_size(&self) -> usize {
        self.field_size
    }

    /// Weight at displacement `d`. Panics if `|d| >= field_size`.
    pub fn at(&self, d: isize) -> f64 {
        self.weights[(d + self.field_size as isize - 1) as usize]
    }

    /// All weights, ordered from displacement `-(n-1)` to `n-1`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `k(x' - x)` for `x' = 0..n`, which equals `k(x - x')` by symmetry.
    fn row(&self, x: usize) -> &[f64] {
        let start = self.field_size - 1 - x;
        &self.weights[start..start + self.field_size]
    }
}

pub fn build_kernel(params: &FieldParams) -> KernelTable {
    let n = params.field_size;
    let weights = (0..2 * n - 1)
        .map(|i| {
            let d = i.abs_diff(n - 1);
            kernel_value(d as f64, params)
        })
        .collect();
    KernelTable { weights, field_size: n }
}

/// Lateral input `sum_x' k(x - x') g(u(x'))` over the finite grid. Neurons
/// outside the grid contribute nothing.
pub fn lateral_input(state: &FieldState, kernel: &KernelTable, beta: f64) -> Result<Vec<f64>> {
    let n = kernel.field_size();
    if state.u.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: state.u.len() });
    }
    let gate: Vec<f64> = state.u.iter().map(|&v| sigmoid_gate(v, beta)).collect();
    let mut out = vec![0.0; n];
    convolve_gate(&gate, kernel, &mut out);
    Ok(out)
}

fn convolve_gate(gate: &[f64], kernel: &KernelTable, out: &mut [f64]) {
    for (x, slot) in out.iter_mut().enumerate() {
        *slot = dot(kernel.row(x), gate);
    }
}

// Four independent accumulators so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let tail: f64 = chunks_a
        .remainder()
        .iter()
        .zip(chunks_b.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (ca, cb) in chunks_a.zip(chunks_b) {
        for i in 0..4 {
            acc[i] += ca[i] * cb[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Reusable stepping machinery for one input configuration.
///
/// Holds the kernel and scratch buffers so a trial allocates nothing per step.
#[derive(Debug, Clone)]
pub struct Integrator {
    params: FieldParams,
    kernel: KernelTable,
    inputs: Vec<f64>,
    smoothing: Option<Vec<f64>>,
    gate: Vec<f64>,
    lateral: Vec<f64>,
    noise: Vec<f64>,
    smoothed: Vec<f64>,
}

impl Integrator {
    pub fn new(params: &FieldParams, inputs: &[f64]) -> Result<Self> {
        params.validate()?;
        let n = params.field_size;
        if inputs.len() != n {
            return Err(Error::SizeMismatch { expected: n, got: inputs.len() });
        }
        if inputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("external input contains non-finite values".into()));
        }
        Ok(Integrator {
            params: params.clone(),
            kernel: build_kernel(params),
            inputs: inputs.to_vec(),
            smoothing: smoothing_kernel(params),
            gate: vec![0.0; n],
            lateral: vec![0.0; n],
            noise: vec![0.0; n],
            smoothed: vec![0.0; n],
        })
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn kernel(&self) -> &KernelTable {
        &self.kernel
    }

    /// Advances `state` by one step, drawing fresh noise from `noise`.
    pub fn step<N: NoiseSource + ?Sized>(&mut self, state: &mut FieldState, noise: &mut N) -> Result<()> {
        if self.params.q > 0.0 {
            noise.fill_standard_normal(&mut self.noise);
            if let Some(weights) = &self.smoothing {
                smooth(&self.noise, weights, &mut self.smoothed);
                std::mem::swap(&mut self.noise, &mut self.smoothed);
            }
        } else {
            self.noise.fill(0.0);
        }
        self.step_with_noise(state)
    }

    fn step_with_noise(&mut self, state: &mut FieldState) -> Result<()> {
        let p = &self.params;
        if state.u.len() != p.field_size {
            return Err(Error::SizeMismatch { expected: p.field_size, got: state.u.len() });
        }
        for (g, &v) in self.gate.iter_mut().zip(&state.u) {
            *g = sigmoid_gate(v, p.beta);
        }
        convolve_gate(&self.gate, &self.kernel, &mut self.lateral);
        let rate = p.dt / p.tau;
        for (((u, &s), &lat), &xi) in state.u.iter_mut().zip(&self.inputs).zip(&self.lateral).zip(&self.noise) {
            *u += rate * (-*u + p.h + s + lat + p.q * xi);
        }
        state.step += 1;
        if !state.is_finite() {
            return Err(Error::Diverged { step: state.step, seed: None });
        }
        Ok(())
    }
}

/// One Euler step with caller-supplied noise (`noise[x]` is a standard normal draw).
pub fn field_step(
    state: &FieldState,
    inputs: &[f64],
    kernel: &KernelTable,
    params: &FieldParams,
    noise: &[f64],
) -> Result<FieldState> {
    let n = params.field_size;
    if kernel.field_size() != n {
        return Err(Error::SizeMismatch { expected: n, got: kernel.field_size() });
    }
    for len in [inputs.len(), noise.len()] {
        if len != n {
            return Err(Error::SizeMismatch { expected: n, got: len });
        }
    }
    let mut integrator = Integrator {
        params: params.clone(),
        kernel: kernel.clone(),
        inputs: inputs.to_vec(),
        smoothing: None,
        gate: vec![0.0; n],
        lateral: vec![0.0; n],
        noise: noise.to_vec(),
        smoothed: Vec::new(),
    };
    let mut next = state.clone();
    integrator.step_with_noise(&mut next)?;
    Ok(next)
}

fn smoothing_kernel(params: &FieldParams) -> Option<Vec<f64>> {
    if params.noise_smoothing <= 0.0 {
        return None;
    }
    let n = params.field_size;
    let s = params.noise_smoothing;
    let raw: Vec<f64> = (0..2 * n - 1)
        .map(|i| {
            let d = i.abs_diff(n - 1) as f64;
            (-d * d / (2.0 * s * s)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    Some(raw.into_iter().map(|w| w / total).collect())
}

fn smooth(noise: &[f64], weights: &[f64], out: &mut [f64]) {
    let n = noise.len();
    for (x, slot) in out.iter_mut().enumerate() {
        let start = n - 1 - x;
        *slot = dot(&weights[start..start + n], noise);
    }
}

/// Per-step scalar summary plus the final state, for runs that do not keep
/// every intermediate field.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub final_state: FieldState,
    /// Maximum activation at steps `0..=n_steps`.
    pub max_u: Vec<f64>,
    /// Number of above-threshold neurons at steps `0..=n_steps`.
    pub n_above: Vec<usize>,
    /// First above-threshold neuron in scan order (lowest step, then lowest index).
    pub first_crossing: Option<Crossing>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub position: usize,
    pub step: u64,
}

impl Crossing {
    pub(crate) fn find(state: &FieldState) -> Option<Self> {
        state.u.iter().position(|&v| v > THRESHOLD).map(|position| Crossing {
            position,
            step: state.step,
        })
    }
}

impl RunSummary {
    fn start(state: &FieldState) -> Self {
        RunSummary {
            final_state: state.clone(),
            max_u: vec![state.max_activation()],
            n_above: vec![state.count_above_threshold()],
            first_crossing: Crossing::find(state),
        }
    }

    fn record(&mut self, state: &FieldState) {
        self.max_u.push(state.max_activation());
        self.n_above.push(state.count_above_threshold());
        if self.first_crossing.is_none() {
            self.first_crossing = Crossing::find(state);
        }
    }

    /// Builds the summary of a full trajectory.
    pub fn from_trajectory(trajectory: &[FieldState]) -> Option<Self> {
        let (first, rest) = trajectory.split_first()?;
        let mut summary = RunSummary::start(first);
        for state in rest {
            summary.record(state);
        }
        summary.final_state = trajectory.last()?.clone();
        Some(summary)
    }
}

fn check_initial(initial: &FieldState, params: &FieldParams) -> Result<()> {
    if initial.step != 0 {
        return Err(Error::InvalidInput(format!("initial state must be at step 0, got {}", initial.step)));
    }
    if initial.u.len() != params.field_size {
        return Err(Error::SizeMismatch { expected: params.field_size, got: initial.u.len() });
    }
    if !initial.is_finite() {
        return Err(Error::Diverged { step: 0, seed: None });
    }
    Ok(())
}

/// Runs `n_steps` steps and returns every state, `n_steps + 1` in total.
pub fn evolve<N: NoiseSource + ?Sized>(
    initial: FieldState,
    inputs: &[f64],
    params: &FieldParams,
    noise: &mut N,
) -> Result<Vec<FieldState>> {
    check_initial(&initial, params)?;
    let mut integrator = Integrator::new(params, inputs)?;
    let mut states = Vec::with_capacity(params.n_steps + 1);
    let mut state = initial;
    states.push(state.clone());
    for _ in 0..params.n_steps {
        integrator.step(&mut state, noise)?;
        states.push(state.clone());
    }
    Ok(states)
}

/// Memory-lean variant of [`evolve`]: keeps only the final state and per-step scalars.
pub fn evolve_summary<N: NoiseSource + ?Sized>(
    initial: FieldState,
    inputs: &[f64],
    params: &FieldParams,
    noise: &mut N,
) -> Result<RunSummary> {
    let mut integrator = Integrator::new(params, inputs)?;
    evolve_summary_with(&mut integrator, initial, noise)
}

/// [`evolve_summary`] reusing a prepared integrator.
pub fn evolve_summary_with<N: NoiseSource + ?Sized>(
    integrator: &mut Integrator,
    initial: FieldState,
    noise: &mut N,
) -> Result<RunSummary> {
    check_initial(&initial, integrator.params())?;
    let n_steps = integrator.params().n_steps;
    let mut summary = RunSummary::start(&initial);
    summary.max_u.reserve(n_steps);
    summary.n_above.reserve(n_steps);
    let mut state = initial;
    for _ in 0..n_steps {
        integrator.step(&mut state, noise)?;
        summary.record(&state);
    }
    summary.final_state = state;
    Ok(summary)
}
