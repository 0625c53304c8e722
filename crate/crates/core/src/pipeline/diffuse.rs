//! Dataset loading and file output for the toy diffusion model.

use std::path::{Path, PathBuf};

use super::{create_dir, ManifestEntry, PipelineError, Split};
use crate::depth::{read_depth_file, read_mask_file, DepthImage, DepthSpace, DisparityConfig};
use crate::diffusion::{sample_many, ConditionTensor, DiffusionSchedule, NoisePredictor, TrainingPair};
use crate::depth::write_depth_file;
use crate::grid::Grid;

/// Training pairs for the manifest entries of `split`: the stored disparity
/// as target (0 off the sketch), conditioned on the sketch and, when the
/// entry has one, its partial depth.
pub fn load_training_pairs(
    root: &Path,
    entries: &[ManifestEntry],
    split: Split,
) -> Result<Vec<TrainingPair>, PipelineError> {
    entries
        .iter()
        .filter(|e| e.split == split)
        .map(|e| {
            let mask = read_mask_file(&root.join(&e.mask))?;
            let depth = read_depth_file(&root.join(&e.depth))?;
            let cond = match (&e.partial, &e.partial_mask) {
                (Some(p), Some(m)) => {
                    let partial = read_depth_file(&root.join(p))?;
                    let valid = read_mask_file(&root.join(m))?;
                    ConditionTensor::new(mask, partial.values, valid)?
                }
                _ => ConditionTensor::sketch_only(mask),
            };
            Ok(TrainingPair::new(depth.values, cond)?)
        })
        .collect()
}

/// Draw `draws` samples and write them as `<out>/<stem>_<k>.png`.
#[allow(clippy::too_many_arguments)]
pub fn sample_to_files<P: NoisePredictor + Sync + ?Sized>(
    net: &P,
    schedule: &DiffusionSchedule,
    cond: &ConditionTensor,
    draws: usize,
    seed: u64,
    stride: usize,
    disparity: DisparityConfig,
    out: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, PipelineError> {
    create_dir(out)?;
    let samples = sample_many(net, schedule, cond, draws, seed, stride)?;
    samples
        .into_iter()
        .enumerate()
        .map(|(k, values)| {
            let img = DepthImage {
                valid: Grid::new(values.width(), values.height(), true),
                values,
                config: disparity,
                space: DepthSpace::NormalizedDisparity,
            };
            let path = out.join(format!("{stem}_{k}.png"));
            write_depth_file(&path, &img)?;
            Ok(path)
        })
        .collect()
}
