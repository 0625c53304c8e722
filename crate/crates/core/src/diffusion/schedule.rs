use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::DiffusionError;
use crate::rng::seeded;

pub const DEFAULT_STEPS: usize = 200;
/// Linear beta endpoints of the classic 1000-step schedule; shorter chains
/// scale both by `1000 / T` so the chain still ends near pure noise.
pub const REFERENCE_BETA_START: f64 = 1e-4;
pub const REFERENCE_BETA_END: f64 = 2e-2;
pub const REFERENCE_STEPS: f64 = 1000.0;

/// Variance-preserving noise schedule. Index `t` runs `1..=T`; index 0 is
/// the clean data (`alpha_bar_0 = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSchedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl Default for DiffusionSchedule {
    fn default() -> Self {
        Self::scaled_linear(DEFAULT_STEPS).expect("default schedule is valid")
    }
}

impl DiffusionSchedule {
    /// Linear betas from `beta_start` to `beta_end` over `steps` steps.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self, DiffusionError> {
        if steps == 0 {
            return Err(DiffusionError::Schedule("need at least one step".into()));
        }
        let betas = (0..steps)
            .map(|i| {
                if steps == 1 {
                    beta_start
                } else {
                    beta_start + (beta_end - beta_start) * i as f64 / (steps - 1) as f64
                }
            })
            .collect();
        Self::from_betas(betas)
    }

    /// Linear schedule rescaled from the 1000-step reference range.
    pub fn scaled_linear(steps: usize) -> Result<Self, DiffusionError> {
        let s = REFERENCE_STEPS / steps as f64;
        Self::linear(steps, REFERENCE_BETA_START * s, REFERENCE_BETA_END * s)
    }

    pub fn from_betas(betas: Vec<f64>) -> Result<Self, DiffusionError> {
        if betas.is_empty() {
            return Err(DiffusionError::Schedule("empty beta list".into()));
        }
        if betas.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(DiffusionError::Schedule("betas must lie in (0, 1)".into()));
        }
        if betas.windows(2).any(|w| w[1] < w[0]) {
            return Err(DiffusionError::Schedule("betas must be non-decreasing".into()));
        }
        let mut alpha_bars = Vec::with_capacity(betas.len() + 1);
        alpha_bars.push(1.0);
        let mut acc = 1.0;
        for b in &betas {
            acc *= 1.0 - b;
            alpha_bars.push(acc);
        }
        Ok(Self { betas, alpha_bars })
    }

    /// Number of noising steps `T`.
    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        1.0 - self.betas[t - 1]
    }

    /// `Π_{s ≤ t} alpha_s`, with `alpha_bar(0) = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t]
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn check_timestep(&self, t: usize) -> Result<(), DiffusionError> {
        if t == 0 || t > self.steps() {
            return Err(DiffusionError::Timestep { t, max: self.steps() });
        }
        Ok(())
    }
}

/// `z_t = sqrt(ab)·z0 + sqrt(1-ab)·eps` for a given noise draw.
pub fn noise_with(z0: &[f64], eps: &[f64], alpha_bar: f64) -> Vec<f64> {
    let a = alpha_bar.sqrt();
    let s = (1.0 - alpha_bar).sqrt();
    z0.iter().zip(eps).map(|(z, e)| a * z + s * e).collect()
}

pub fn gaussian_vec(rng: &mut impl rand::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Sample the forward process at step `t`; returns `(z_t, eps)`.
pub fn forward_noise(
    z0: &[f64],
    t: usize,
    schedule: &DiffusionSchedule,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), DiffusionError> {
    schedule.check_timestep(t)?;
    let mut rng = seeded(seed);
    let eps = gaussian_vec(&mut rng, z0.len());
    Ok((noise_with(z0, &eps, schedule.alpha_bar(t)), eps))
}
