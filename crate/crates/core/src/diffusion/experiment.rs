//! Two-mode (Necker) experiment: a regressor averages the modes, the
//! diffusion model picks one.
//!
//! A wire cube seen from a generic view is rendered at low resolution. Its
//! disparity, stretched over the stroke pixels to `[0.1, 0.9]`, is mode A;
//! the depth-reversed reading `1 - y` is mode B. Both are equally frequent
//! for the same sketch, so the least-squares optimum for a deterministic
//! model is their mean, which is neither.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::condition::ConditionTensor;
use super::net::{DenoiserConfig, OutputParam, TinyDenoiser};
use super::sampler::sample_many;
use super::schedule::{DiffusionSchedule, DEFAULT_STEPS};
use super::train::{regress, train_denoiser, train_regressor, TrainConfig, TrainingPair};
use super::DiffusionError;
use crate::camera::OrthoCamera;
use crate::depth::DisparityConfig;
use crate::grid::Grid;
use crate::partial::{bfs_partial_mask, PartialDepthPair, TRAINING_K_MAX, TRAINING_K_MIN};
use crate::render::{rasterize, RenderBundle};
use crate::rng::{derive, seeded};
use crate::wireframe::WireframeGraph;
use crate::{shapes, Vec3};

const MODE_LOW: f64 = 0.1;
const MODE_HIGH: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct NeckerFixture {
    pub graph: WireframeGraph,
    pub bundle: RenderBundle,
    pub sketch: Grid<bool>,
    pub y_a: Grid<f64>,
    pub y_b: Grid<f64>,
}

impl NeckerFixture {
    pub fn mean(&self) -> Grid<f64> {
        Grid::from_vec(
            self.y_a.width(),
            self.y_a.height(),
            self.y_a
                .as_slice()
                .iter()
                .zip(self.y_b.as_slice())
                .map(|(a, b)| (a + b) / 2.0)
                .collect(),
        )
        .expect("same shape")
    }

    /// MAE over sketch pixels.
    pub fn distance(&self, a: &Grid<f64>, b: &Grid<f64>) -> f64 {
        masked_mae(a.as_slice(), b.as_slice(), self.sketch.as_slice())
    }

    /// Partial depth revealing `k` of the strokes with values from `mode`.
    pub fn partial(&self, mode: &Grid<f64>, k: f64, seed: u64) -> PartialDepthPair {
        let mut pair = bfs_partial_mask(&self.bundle, &self.graph, k, seed).expect("k in [0, 1]");
        for ((v, m), y) in pair
            .partial
            .values
            .as_mut_slice()
            .iter_mut()
            .zip(pair.mask.as_slice())
            .zip(mode.as_slice())
        {
            if *m {
                *v = *y;
            }
        }
        pair
    }

    pub fn condition(&self, pair: Option<&PartialDepthPair>) -> ConditionTensor {
        match pair {
            Some(p) => ConditionTensor::from_partial(self.sketch.clone(), p).expect("partial lies on the sketch"),
            None => ConditionTensor::sketch_only(self.sketch.clone()),
        }
    }
}

fn masked_mae(a: &[f64], b: &[f64], mask: &[bool]) -> f64 {
    let (sum, n) = a
        .iter()
        .zip(b)
        .zip(mask)
        .filter(|(_, &m)| m)
        .fold((0.0, 0usize), |(s, n), ((x, y), _)| (s + (x - y).abs(), n + 1));
    sum / n.max(1) as f64
}

/// Cube fixture at `resolution²`. With `degenerate` both modes are mode A.
pub fn necker_fixture(resolution: usize, degenerate: bool) -> Result<NeckerFixture, DiffusionError> {
    let graph = shapes::unit_cube()
        .normalize_to_unit_sphere()
        .map_err(|e| DiffusionError::Shape(e.to_string()))?;
    let cam = OrthoCamera::looking(Vec3::new(0.62, 0.48, 0.62), 1.05, resolution, resolution)
        .map_err(|e| DiffusionError::Shape(e.to_string()))?;
    let bundle = rasterize(&graph, &cam, 0.5, &DisparityConfig::default())
        .map_err(|e| DiffusionError::Shape(e.to_string()))?;
    let sketch = bundle.mask.clone();
    let disp = bundle.disparity.values.as_slice();
    let on: Vec<f64> = disp
        .iter()
        .zip(sketch.as_slice())
        .filter(|(_, &m)| m)
        .map(|(d, _)| *d)
        .collect();
    let lo = on.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = on.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if on.is_empty() || hi - lo <= 0.0 {
        return Err(DiffusionError::Shape("fixture has no depth range".into()));
    }
    let stretch = |d: f64| MODE_LOW + (MODE_HIGH - MODE_LOW) * (d - lo) / (hi - lo);
    let y_a = Grid::from_vec(
        resolution,
        resolution,
        disp.iter()
            .zip(sketch.as_slice())
            .map(|(&d, &m)| if m { stretch(d) } else { 0.0 })
            .collect(),
    )
    .expect("shape");
    let y_b = if degenerate {
        y_a.clone()
    } else {
        Grid::from_vec(
            resolution,
            resolution,
            y_a.as_slice()
                .iter()
                .zip(sketch.as_slice())
                .map(|(&y, &m)| if m { 1.0 - y } else { 0.0 })
                .collect(),
        )
        .expect("shape")
    };
    Ok(NeckerFixture {
        graph,
        bundle,
        sketch,
        y_a,
        y_b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoModeConfig {
    pub resolution: usize,
    pub seed: u64,
    pub schedule_steps: usize,
    pub denoiser: DenoiserConfig,
    pub diffusion: TrainConfig,
    pub regressor: TrainConfig,
    /// Partial-depth training examples per mode; as many empty-condition
    /// copies are added so half the conditions carry no depth.
    pub partial_examples: usize,
    pub samples: usize,
    pub sample_stride: usize,
    pub tau: f64,
    pub anchor_coverage: f64,
    pub degenerate: bool,
}

impl Default for TwoModeConfig {
    fn default() -> Self {
        let resolution = 16;
        Self {
            resolution,
            seed: 0,
            schedule_steps: DEFAULT_STEPS,
            denoiser: DenoiserConfig::global(resolution, resolution, &[], &[128, 128]).with_output(OutputParam::Sample),
            diffusion: TrainConfig {
                steps: 12_000,
                batch: 32,
                learning_rate: 5e-2,
                clip_norm: Some(5.0),
                seed: 1,
            },
            regressor: TrainConfig {
                steps: 1500,
                batch: usize::MAX,
                learning_rate: 2e-3,
                clip_norm: Some(5.0),
                seed: 2,
            },
            partial_examples: 64,
            samples: 100,
            sample_stride: 1,
            tau: 0.1,
            anchor_coverage: 0.25,
            degenerate: false,
        }
    }
}

/// Where a batch of samples landed relative to the two modes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModeCounts {
    pub total: usize,
    /// Nearest mode is A and within τ.
    pub near_a: usize,
    /// Nearest mode is B and within τ.
    pub near_b: usize,
    /// Within τ of a mode but also within τ of the mean image.
    pub ambiguous: usize,
    pub neither: usize,
    pub mean_distance_to_nearest: f64,
}

impl ModeCounts {
    pub fn fraction_near_mode(&self) -> f64 {
        (self.near_a + self.near_b) as f64 / self.total.max(1) as f64
    }

    pub fn fraction_a(&self) -> f64 {
        self.near_a as f64 / self.total.max(1) as f64
    }

    fn classify(fx: &NeckerFixture, samples: &[Grid<f64>], tau: f64) -> Self {
        let mean = fx.mean();
        let mut c = ModeCounts {
            total: samples.len(),
            ..Default::default()
        };
        let mut dist_sum = 0.0;
        for s in samples {
            let (da, db, dm) = (fx.distance(s, &fx.y_a), fx.distance(s, &fx.y_b), fx.distance(s, &mean));
            dist_sum += da.min(db);
            if da.min(db) > tau {
                c.neither += 1;
            } else if dm <= tau && fx.distance(&fx.y_a, &mean) > tau {
                c.ambiguous += 1;
            } else if da <= db {
                c.near_a += 1;
            } else {
                c.near_b += 1;
            }
        }
        c.mean_distance_to_nearest = dist_sum / samples.len().max(1) as f64;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoModeReport {
    pub sketch_pixels: usize,
    /// MAE between each mode and the mean image; twice this is the mode gap.
    pub mode_to_mean: f64,
    pub regressor_to_mean: f64,
    pub regressor_to_nearest_mode: f64,
    pub regressor_final_loss: f64,
    pub diffusion_initial_loss: f64,
    pub diffusion_final_loss: f64,
    /// Samples conditioned on the sketch alone.
    pub free: ModeCounts,
    /// Samples conditioned on mode-A partial depth.
    pub anchored: ModeCounts,
    pub anchored_coverage: f64,
}

/// Training pairs: for each mode, `n` BFS-partial conditions with values
/// from that mode and `n` sketch-only conditions.
pub fn two_mode_dataset(fx: &NeckerFixture, n: usize, seed: u64) -> Vec<TrainingPair> {
    let mut rng = seeded(seed);
    let plans: Vec<(f64, u64)> = (0..n)
        .map(|_| (rng.gen_range(TRAINING_K_MIN..TRAINING_K_MAX), rng.gen::<u64>()))
        .collect();
    let mut data = Vec::with_capacity(4 * n);
    for mode in [&fx.y_a, &fx.y_b] {
        for &(k, s) in &plans {
            let p = fx.partial(mode, k, s);
            data.push(TrainingPair::new(mode.clone(), fx.condition(Some(&p))).expect("shape"));
        }
        for _ in 0..n {
            data.push(TrainingPair::new(mode.clone(), fx.condition(None)).expect("shape"));
        }
    }
    data
}

fn converged(losses: &[f64]) -> bool {
    let n = (losses.len() / 10).max(1);
    if losses.len() < 2 * n {
        return true;
    }
    let head = losses[..n].iter().sum::<f64>() / n as f64;
    let tail = losses[losses.len() - n..].iter().sum::<f64>() / n as f64;
    tail < head
}

fn trace(losses: &[f64]) -> String {
    let stride = (losses.len() / 10).max(1);
    losses
        .iter()
        .step_by(stride)
        .map(|l| format!("{l:.3}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn two_mode_experiment(cfg: &TwoModeConfig) -> Result<TwoModeReport, DiffusionError> {
    let fx = necker_fixture(cfg.resolution, cfg.degenerate)?;
    if cfg.denoiser.width != cfg.resolution || cfg.denoiser.height != cfg.resolution {
        return Err(DiffusionError::Shape("denoiser size differs from the fixture".into()));
    }
    let schedule = DiffusionSchedule::scaled_linear(cfg.schedule_steps)?;
    let free_cond = fx.condition(None);

    // regressor: the sketch-only pairs are all it needs to see the ambiguity
    let reg_data = vec![
        TrainingPair::new(fx.y_a.clone(), free_cond.clone())?,
        TrainingPair::new(fx.y_b.clone(), free_cond.clone())?,
    ];
    let mut regressor = TinyDenoiser::new(cfg.denoiser.clone(), derive(cfg.seed, &[1]))?;
    let reg_report = train_regressor(&mut regressor, &reg_data, &cfg.regressor)?;
    if !converged(&reg_report.losses) {
        return Err(DiffusionError::NonConvergence(format!(
            "regressor loss trace: {}",
            trace(&reg_report.losses)
        )));
    }
    let reg_out = Grid::from_vec(cfg.resolution, cfg.resolution, regress(&regressor, &free_cond)).expect("shape");

    let data = two_mode_dataset(&fx, cfg.partial_examples, derive(cfg.seed, &[2]));
    let mut net = TinyDenoiser::new(cfg.denoiser.clone(), derive(cfg.seed, &[3]))?;
    let mut train_cfg = cfg.diffusion;
    train_cfg.seed = derive(cfg.seed, &[4, cfg.diffusion.seed]);
    let report = train_denoiser(&mut net, &data, &schedule, &train_cfg)?;
    if !converged(&report.losses) {
        return Err(DiffusionError::NonConvergence(format!(
            "diffusion loss trace: {}",
            trace(&report.losses)
        )));
    }
    log::info!(
        "two-mode training: loss {:.3} -> {:.3}",
        report.head_mean(100),
        report.tail_mean(100)
    );

    let free_samples = sample_many(&net, &schedule, &free_cond, cfg.samples, derive(cfg.seed, &[5]), cfg.sample_stride)?;
    let anchor = fx.partial(&fx.y_a, cfg.anchor_coverage, derive(cfg.seed, &[6]));
    let anchored_samples = sample_many(
        &net,
        &schedule,
        &fx.condition(Some(&anchor)),
        cfg.samples,
        derive(cfg.seed, &[7]),
        cfg.sample_stride,
    )?;

    let mean = fx.mean();
    Ok(TwoModeReport {
        sketch_pixels: fx.sketch.count(),
        mode_to_mean: fx.distance(&fx.y_a, &mean),
        regressor_to_mean: fx.distance(&reg_out, &mean),
        regressor_to_nearest_mode: fx.distance(&reg_out, &fx.y_a).min(fx.distance(&reg_out, &fx.y_b)),
        regressor_final_loss: reg_report.tail_mean(1),
        diffusion_initial_loss: report.head_mean(100),
        diffusion_final_loss: report.tail_mean(100),
        free: ModeCounts::classify(&fx, &free_samples, cfg.tau),
        anchored: ModeCounts::classify(&fx, &anchored_samples, cfg.tau),
        anchored_coverage: anchor.coverage,
    })
}
