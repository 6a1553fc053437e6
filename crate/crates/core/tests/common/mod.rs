#![allow(dead_code)]

use vot_field::field::{kernel_value, FieldParams};
use vot_field::readout::above_threshold_regions;
use vot_field::FieldState;

/// Direct double loop over the interaction formula, independent of the kernel table.
pub fn naive_lateral(u: &[f64], params: &FieldParams) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|x| {
            (0..n)
                .map(|xp| {
                    let g = 1.0 / (1.0 + (-params.beta * u[xp]).exp());
                    kernel_value(x as f64 - xp as f64, params) * g
                })
                .sum()
        })
        .collect()
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Above-threshold regions merged when separated by fewer than `gap` neurons.
pub fn clustered_regions(state: &FieldState, gap: usize) -> usize {
    let regions = above_threshold_regions(state);
    let mut count = 0;
    let mut last_end: Option<usize> = None;
    for (start, end) in regions {
        match last_end {
            Some(prev) if start - prev <= gap => {}
            _ => count += 1,
        }
        last_end = Some(end);
    }
    count
}
