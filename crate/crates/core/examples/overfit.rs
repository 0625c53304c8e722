//! Overfit the toy diffusion model to a single rendered sketch and check
//! that sampling reproduces the target disparity.
//!
//! cargo run --release --example overfit -- [steps]

use std::time::Instant;

use wiredepth::diffusion::{
    sample_many, train_denoiser, ConditionTensor, DenoiserConfig, DiffusionSchedule, OutputParam, TinyDenoiser,
    TrainConfig, TrainingPair,
};
use wiredepth::metrics::mae;
use wiredepth::{rasterize, shapes, DisparityConfig, OrthoCamera, Vec3};

fn main() {
    let steps: usize = std::env::args().nth(1).map_or(1500, |s| s.parse().expect("steps"));
    let g = shapes::unit_cube().normalize_to_unit_sphere().unwrap();
    let cam = OrthoCamera::looking(Vec3::new(0.7, 0.45, 0.55), 1.05, 16, 16).unwrap();
    let bundle = rasterize(&g, &cam, 0.5, &DisparityConfig::default()).unwrap();
    let target = bundle.disparity.values.clone();
    let pair = TrainingPair::new(target.clone(), ConditionTensor::sketch_only(bundle.mask.clone())).unwrap();

    let schedule = DiffusionSchedule::scaled_linear(100).unwrap();
    let config = DenoiserConfig::global(16, 16, &[], &[64]).with_output(OutputParam::Sample);
    let mut net = TinyDenoiser::new(config, 3).unwrap();
    let train = TrainConfig {
        steps,
        batch: 8,
        learning_rate: 5e-2,
        clip_norm: Some(5.0),
        seed: 4,
    };
    let t0 = Instant::now();
    let report = train_denoiser(&mut net, &vec![pair.clone(); 8], &schedule, &train).unwrap();
    println!(
        "{} params, loss {:.3} -> {:.4} in {:.1}s",
        net.param_count(),
        report.head_mean(steps / 10),
        report.tail_mean(steps / 10),
        t0.elapsed().as_secs_f64()
    );

    let everywhere = vec![true; target.len()];
    for (i, s) in sample_many(&net, &schedule, &pair.cond, 5, 9, 1).unwrap().iter().enumerate() {
        let all = mae(s.as_slice(), target.as_slice(), &everywhere).unwrap();
        let sketch = mae(s.as_slice(), target.as_slice(), bundle.mask.as_slice()).unwrap();
        println!("sample {i}: MAE {all:.4} over the image, {sketch:.4} on the sketch");
    }
}
