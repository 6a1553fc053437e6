//! Gaussian external inputs and their composition into a single input vector.
//! Inputs are constant over a trial.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianInput {
    /// Amplitude; negative values inhibit.
    pub a: f64,
    /// Center position (ms).
    pub p: f64,
    /// Width (ms).
    pub w: f64,
    #[serde(default)]
    pub label: String,
}

impl GaussianInput {
    pub fn new(label: impl Into<String>, a: f64, p: f64, w: f64) -> Self {
        GaussianInput { a, p, w, label: label.into() }
    }

    pub fn with_amplitude(&self, a: f64) -> Self {
        GaussianInput { a, ..self.clone() }
    }

    pub fn validate(&self, field_size: usize) -> Result<()> {
        if !(self.w.is_finite() && self.w > 0.0) {
            return Err(Error::InvalidInput(format!("input `{}`: width must be > 0, got {}", self.label, self.w)));
        }
        if !self.a.is_finite() {
            return Err(Error::InvalidInput(format!("input `{}`: amplitude must be finite, got {}", self.label, self.a)));
        }
        if !(self.p.is_finite() && self.p >= 0.0 && self.p < field_size as f64) {
            return Err(Error::InvalidInput(format!(
                "input `{}`: position {} outside the grid [0, {field_size})",
                self.label, self.p
            )));
        }
        Ok(())
    }

    /// True when the profile is still above 1% of its peak at a grid edge.
    pub fn clipped_by_grid(&self, field_size: usize) -> bool {
        let edge = self.p.min(field_size as f64 - 1.0 - self.p);
        self.a != 0.0 && (-edge * edge / (2.0 * self.w * self.w)).exp() > 0.01
    }
}

/// `a * exp(-(x - p)^2 / (2 w^2))` sampled at `x = 0..field_size`.
pub fn gaussian_profile(input: &GaussianInput, field_size: usize) -> Result<Vec<f64>> {
    if !(input.w > 0.0) {
        return Err(Error::InvalidInput(format!("input `{}`: width must be > 0, got {}", input.label, input.w)));
    }
    let denom = 2.0 * input.w * input.w;
    Ok((0..field_size)
        .map(|x| {
            let d = x as f64 - input.p;
            input.a * (-d * d / denom).exp()
        })
        .collect())
}

/// Elementwise sum of the profiles; an empty list gives the zero vector.
pub fn compose_inputs(inputs: &[GaussianInput], field_size: usize) -> Result<Vec<f64>> {
    let mut total = vec![0.0; field_size];
    for input in inputs {
        for (t, v) in total.iter_mut().zip(gaussian_profile(input, field_size)?) {
            *t += v;
        }
    }
    Ok(total)
}
