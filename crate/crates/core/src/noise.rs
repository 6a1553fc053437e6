//! Per-trial noise streams.
//!
//! Every trial owns an independent generator whose seed is a pure function of
//! the batch's master seed and the trial index, so results never depend on how
//! trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Source of i.i.d. standard normal draws.
pub trait NoiseSource {
    fn fill_standard_normal(&mut self, out: &mut [f64]);
}

/// Always yields zero. Useful for noiseless runs and tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        out.fill(0.0);
    }
}

#[derive(Debug, Clone)]
pub struct TrialNoise {
    seed: u64,
    rng: ChaCha8Rng,
}

impl TrialNoise {
    pub fn new(seed: u64) -> Self {
        TrialNoise {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn for_trial(master_seed: u64, trial_index: u64) -> Self {
        Self::new(trial_seed(master_seed, trial_index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl NoiseSource for TrialNoise {
    fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = StandardNormal.sample(&mut self.rng);
        }
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial_index` under `master_seed`.
pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ trial_index.wrapping_mul(GOLDEN_GAMMA))
}
