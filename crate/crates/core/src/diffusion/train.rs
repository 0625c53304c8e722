//! Noise-prediction training and the deterministic regression baseline.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::condition::ConditionTensor;
use super::net::{NoisePredictor, TinyDenoiser};
use super::schedule::{gaussian_vec, noise_with, DiffusionSchedule};
use super::DiffusionError;
use crate::grid::Grid;
use crate::rng::{derive, seeded};

/// Examples per parallel work unit. Partial sums are always combined in
/// chunk order, so results do not depend on the thread count.
const CHUNK: usize = 4;

/// Target disparity `y ∈ [0,1]` with its condition.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub target: Grid<f64>,
    pub cond: ConditionTensor,
}

impl TrainingPair {
    pub fn new(target: Grid<f64>, cond: ConditionTensor) -> Result<Self, DiffusionError> {
        if !target.same_shape(&cond.sketch) {
            return Err(DiffusionError::Shape("target and condition differ in size".into()));
        }
        Ok(Self { target, cond })
    }

    /// `z0 = 2y - 1`.
    pub fn z0(&self) -> Vec<f64> {
        self.target.as_slice().iter().map(|&y| 2.0 * y - 1.0).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub learning_rate: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch: 16,
            learning_rate: 1e-3,
            clip_norm: Some(1.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub steps: usize,
    /// Per-step batch loss.
    pub losses: Vec<f64>,
}

impl TrainReport {
    /// Mean loss over the last `n` steps.
    pub fn tail_mean(&self, n: usize) -> f64 {
        let n = n.min(self.losses.len()).max(1);
        let tail = &self.losses[self.losses.len().saturating_sub(n)..];
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    }

    pub fn head_mean(&self, n: usize) -> f64 {
        let n = n.min(self.losses.len()).max(1);
        self.losses[..n].iter().sum::<f64>() / n as f64
    }
}

struct Draw {
    t: usize,
    eps: Vec<f64>,
}

fn draws(batch: &[TrainingPair], schedule: &DiffusionSchedule, seed: u64) -> Vec<Draw> {
    let mut rng = seeded(seed);
    batch
        .iter()
        .map(|pair| {
            let t = rng.gen_range(1..=schedule.steps());
            let eps = gaussian_vec(&mut rng, pair.target.len());
            Draw { t, eps }
        })
        .collect()
}

fn check_batch(batch: &[TrainingPair], pixels: usize) -> Result<(), DiffusionError> {
    if batch.is_empty() {
        return Err(DiffusionError::Shape("empty batch".into()));
    }
    if let Some(p) = batch.iter().find(|p| p.target.len() != pixels || p.cond.pixels() != pixels) {
        return Err(DiffusionError::Shape(format!(
            "example has {} pixels, network expects {pixels}",
            p.target.len()
        )));
    }
    Ok(())
}

/// Noise-prediction loss `E ||eps - eps_theta(z_t, t, c)||²` over `batch`
/// and its gradient. Timesteps and noise are drawn from `seed`. The squared
/// error is summed over pixels and averaged over the batch.
pub fn ldm_loss(
    batch: &[TrainingPair],
    net: &TinyDenoiser,
    schedule: &DiffusionSchedule,
    seed: u64,
) -> Result<(f64, Vec<f64>), DiffusionError> {
    check_batch(batch, net.config().pixels())?;
    let draws = draws(batch, schedule, seed);
    let scale = 1.0 / batch.len() as f64;
    let partials: Vec<(f64, Vec<f64>)> = batch
        .par_chunks(CHUNK)
        .zip(draws.par_chunks(CHUNK))
        .map(|(pairs, ds)| {
            let mut grad = vec![0.0; net.param_count()];
            let mut loss = 0.0;
            for (pair, d) in pairs.iter().zip(ds) {
                let ab = schedule.alpha_bar(d.t);
                let zt = noise_with(&pair.z0(), &d.eps, ab);
                let tape = net.forward_tape(net.input(&zt, &pair.cond), d.t);
                let param = net.config().output;
                let jac = param.eps_jacobian(ab);
                let dout: Vec<f64> = param
                    .to_eps(tape.output(), &zt, ab)
                    .iter()
                    .zip(&d.eps)
                    .map(|(p, e)| {
                        loss += (p - e) * (p - e);
                        2.0 * (p - e) * jac * scale
                    })
                    .collect();
                net.backward(&tape, &dout, &mut grad);
            }
            (loss, grad)
        })
        .collect();
    Ok(reduce(partials, net.param_count(), scale))
}

/// Loss value only, for any predictor. Uses the same draws as [`ldm_loss`].
pub fn ldm_loss_value(
    batch: &[TrainingPair],
    net: &dyn NoisePredictor,
    schedule: &DiffusionSchedule,
    seed: u64,
) -> Result<f64, DiffusionError> {
    if batch.is_empty() {
        return Err(DiffusionError::Shape("empty batch".into()));
    }
    let draws = draws(batch, schedule, seed);
    let mut loss = 0.0;
    for (pair, d) in batch.iter().zip(&draws) {
        let ab = schedule.alpha_bar(d.t);
        let zt = noise_with(&pair.z0(), &d.eps, ab);
        let pred = net.predict(&zt, d.t, ab, &pair.cond);
        if pred.len() != d.eps.len() {
            return Err(DiffusionError::Shape("predictor output size".into()));
        }
        loss += pred.iter().zip(&d.eps).map(|(p, e)| (p - e) * (p - e)).sum::<f64>();
    }
    Ok(loss / batch.len() as f64)
}

/// Direct regression `||z0 - f(0, c)||²`: the network sees a zero noisy
/// channel at timestep 0 and must output `z0`.
pub fn regression_loss(batch: &[TrainingPair], net: &TinyDenoiser) -> Result<(f64, Vec<f64>), DiffusionError> {
    check_batch(batch, net.config().pixels())?;
    let scale = 1.0 / batch.len() as f64;
    let zeros = vec![0.0; net.config().pixels()];
    let partials: Vec<(f64, Vec<f64>)> = batch
        .par_chunks(CHUNK)
        .map(|pairs| {
            let mut grad = vec![0.0; net.param_count()];
            let mut loss = 0.0;
            for pair in pairs {
                let tape = net.forward_tape(net.input(&zeros, &pair.cond), 0);
                let dout: Vec<f64> = tape
                    .output()
                    .iter()
                    .zip(pair.z0())
                    .map(|(p, z)| {
                        loss += (p - z) * (p - z);
                        2.0 * (p - z) * scale
                    })
                    .collect();
                net.backward(&tape, &dout, &mut grad);
            }
            (loss, grad)
        })
        .collect();
    Ok(reduce(partials, net.param_count(), scale))
}

/// Regressor prediction mapped back to disparity `y = (f + 1) / 2`.
pub fn regress(net: &TinyDenoiser, cond: &ConditionTensor) -> Vec<f64> {
    let zeros = vec![0.0; net.config().pixels()];
    net.forward(net.input(&zeros, cond), 0)
        .into_iter()
        .map(|z| (z + 1.0) / 2.0)
        .collect()
}

fn reduce(partials: Vec<(f64, Vec<f64>)>, n: usize, scale: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; n];
    let mut loss = 0.0;
    for (l, g) in partials {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    (loss * scale, grad)
}

fn step(params: &mut [f64], grad: &mut [f64], cfg: &TrainConfig) {
    if let Some(max) = cfg.clip_norm {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > max {
            let s = max / norm;
            grad.iter_mut().for_each(|g| *g *= s);
        }
    }
    for (p, g) in params.iter_mut().zip(grad.iter()) {
        *p -= cfg.learning_rate * g;
    }
}

fn pick_batch(data: &[TrainingPair], batch: usize, seed: u64) -> Vec<TrainingPair> {
    if batch >= data.len() {
        return data.to_vec();
    }
    let mut rng = seeded(seed);
    rand::seq::index::sample(&mut rng, data.len(), batch)
        .into_iter()
        .map(|i| data[i].clone())
        .collect()
}

fn run(
    net: &mut TinyDenoiser,
    data: &[TrainingPair],
    cfg: &TrainConfig,
    mut loss_fn: impl FnMut(&[TrainingPair], &TinyDenoiser, u64) -> Result<(f64, Vec<f64>), DiffusionError>,
) -> Result<TrainReport, DiffusionError> {
    if data.is_empty() {
        return Err(DiffusionError::Shape("no training data".into()));
    }
    let mut losses = Vec::with_capacity(cfg.steps);
    for s in 0..cfg.steps {
        let batch = pick_batch(data, cfg.batch, derive(cfg.seed, &[s as u64, 0]));
        let (loss, mut grad) = loss_fn(&batch, net, derive(cfg.seed, &[s as u64, 1]))?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(DiffusionError::TrainingFault {
                step: s,
                last_finite: losses.last().copied(),
            });
        }
        losses.push(loss);
        step(net.params_mut(), &mut grad, cfg);
    }
    Ok(TrainReport {
        steps: cfg.steps,
        losses,
    })
}

/// SGD on the noise-prediction loss.
pub fn train_denoiser(
    net: &mut TinyDenoiser,
    data: &[TrainingPair],
    schedule: &DiffusionSchedule,
    cfg: &TrainConfig,
) -> Result<TrainReport, DiffusionError> {
    run(net, data, cfg, |batch, net, seed| ldm_loss(batch, net, schedule, seed))
}

/// Gradient descent on the regression loss; full batch when `cfg.batch`
/// covers the data.
pub fn train_regressor(
    net: &mut TinyDenoiser,
    data: &[TrainingPair],
    cfg: &TrainConfig,
) -> Result<TrainReport, DiffusionError> {
    run(net, data, cfg, |batch, net, _| regression_loss(batch, net))
}
