//! Pixel-space conditional denoising diffusion at toy scale.
//!
//! The target is a normalized disparity image `y` mapped to `z0 = 2y - 1`;
//! the condition is the sketch mask, the partial disparity and its validity
//! mask, stacked as extra input channels of a small denoiser that predicts
//! the injected Gaussian noise.

mod condition;
mod experiment;
mod io;
mod net;
mod sampler;
mod schedule;
mod train;

pub use condition::ConditionTensor;
pub use experiment::{
    necker_fixture, two_mode_dataset, two_mode_experiment, ModeCounts, NeckerFixture, TwoModeConfig, TwoModeReport,
};
pub use io::{header_path, load_model, save_model, ModelHeader};
pub use net::{timestep_embedding, DenoiserConfig, LayerKind, NoisePredictor, OutputParam, TinyDenoiser};
pub use sampler::{sample, sample_many, timesteps};
pub use schedule::{forward_noise, DiffusionSchedule};
pub use train::{
    ldm_loss, ldm_loss_value, regress, regression_loss, train_denoiser, train_regressor, TrainConfig, TrainReport,
    TrainingPair,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("timestep {t} outside 1..={max}")]
    Timestep { t: usize, max: usize },
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid condition: {0}")]
    Condition(String),
    #[error("training fault at step {step}: non-finite loss (last finite {last_finite:?})")]
    TrainingFault { step: usize, last_finite: Option<f64> },
    #[error("sampler fault: non-finite state at step {step}")]
    SamplerFault { step: usize },
    #[error("training did not converge: {0}")]
    NonConvergence(String),
    #[error("model file error: {0}")]
    Model(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
