//! Ancestral sampling from `z_T ~ N(0, I)` down to a disparity image.

use rayon::prelude::*;

use super::condition::ConditionTensor;
use super::net::NoisePredictor;
use super::schedule::{gaussian_vec, DiffusionSchedule};
use super::DiffusionError;
use crate::grid::Grid;
use crate::rng::{derive, seeded};

/// Timesteps visited from `T` down to 1, every `stride` steps. The first
/// visited step is always `T` and the last always 1.
pub fn timesteps(steps: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut ts: Vec<usize> = (1..=steps).rev().step_by(stride).collect();
    if ts.last() != Some(&1) {
        ts.push(1);
    }
    ts
}

/// Draw one sample. The clean estimate is clipped to `[-1, 1]` at every
/// step and the posterior variance `β̃` is used for the injected noise.
/// Returns disparity in `[0, 1]`.
pub fn sample<P: NoisePredictor + ?Sized>(
    net: &P,
    schedule: &DiffusionSchedule,
    cond: &ConditionTensor,
    seed: u64,
    stride: usize,
) -> Result<Grid<f64>, DiffusionError> {
    cond.validate()?;
    let n = cond.pixels();
    let mut rng = seeded(seed);
    let mut z = gaussian_vec(&mut rng, n);
    let ts = timesteps(schedule.steps(), stride);
    for (i, &t) in ts.iter().enumerate() {
        let ab = schedule.alpha_bar(t);
        let eps = net.predict(&z, t, ab, cond);
        if eps.len() != n {
            return Err(DiffusionError::Shape(format!("predictor returned {} values for {n} pixels", eps.len())));
        }
        let (sa, sn) = (ab.sqrt(), (1.0 - ab).sqrt());
        let x0: Vec<f64> = z
            .iter()
            .zip(&eps)
            .map(|(zi, ei)| ((zi - sn * ei) / sa).clamp(-1.0, 1.0))
            .collect();
        let prev = ts.get(i + 1).copied().unwrap_or(0);
        if prev == 0 {
            z = x0;
        } else {
            let ab_prev = schedule.alpha_bar(prev);
            let beta = 1.0 - ab / ab_prev;
            let c0 = ab_prev.sqrt() * beta / (1.0 - ab);
            let ct = (1.0 - beta).sqrt() * (1.0 - ab_prev) / (1.0 - ab);
            let sigma = (beta * (1.0 - ab_prev) / (1.0 - ab)).sqrt();
            let noise = gaussian_vec(&mut rng, n);
            for ((zi, x), e) in z.iter_mut().zip(&x0).zip(&noise) {
                *zi = c0 * x + ct * *zi + sigma * e;
            }
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(DiffusionError::SamplerFault { step: t });
        }
    }
    let y = z.into_iter().map(|v| ((v + 1.0) / 2.0).clamp(0.0, 1.0)).collect();
    Ok(Grid::from_vec(cond.width(), cond.height(), y).expect("pixel count matches"))
}

/// `n` independent samples; sample `i` uses seed `derive(seed, [i])`.
pub fn sample_many<P: NoisePredictor + Sync + ?Sized>(
    net: &P,
    schedule: &DiffusionSchedule,
    cond: &ConditionTensor,
    n: usize,
    seed: u64,
    stride: usize,
) -> Result<Vec<Grid<f64>>, DiffusionError> {
    (0..n)
        .into_par_iter()
        .map(|i| sample(net, schedule, cond, derive(seed, &[i as u64]), stride))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Const(f64);

    impl NoisePredictor for Const {
        fn predict(&self, z_t: &[f64], _t: usize, _ab: f64, _c: &ConditionTensor) -> Vec<f64> {
            vec![self.0; z_t.len()]
        }
    }

    #[test]
    fn strided_steps_cover_both_ends() {
        assert_eq!(timesteps(10, 1), (1..=10).rev().collect::<Vec<_>>());
        assert_eq!(timesteps(10, 4), vec![10, 6, 2, 1]);
        assert_eq!(timesteps(9, 4), vec![9, 5, 1]);
    }

    #[test]
    fn output_in_unit_range_and_deterministic() {
        let s = DiffusionSchedule::scaled_linear(40).unwrap();
        let cond = ConditionTensor::sketch_only(Grid::new(6, 5, true));
        let a = sample(&Const(0.0), &s, &cond, 3, 1).unwrap();
        let b = sample(&Const(0.0), &s, &cond, 3, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.width(), a.height()), (6, 5));
        assert!(a.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn non_finite_prediction_faults() {
        let s = DiffusionSchedule::scaled_linear(40).unwrap();
        let cond = ConditionTensor::sketch_only(Grid::new(3, 3, true));
        let err = sample(&Const(f64::NAN), &s, &cond, 0, 1).unwrap_err();
        assert!(matches!(err, DiffusionError::SamplerFault { step: 40 }));
    }
}
