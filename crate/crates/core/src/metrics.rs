//! Depth-map accuracy metrics over valid pixels and best-of-K aggregation.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depth::DepthImage;
use crate::grid::Grid;

/// Denominator guard in NMAE.
pub const NMAE_EPS: f64 = 1e-6;
/// Ground-truth disparities below this are left out of AbsRel and delta.
pub const ABSREL_MIN_GT: f64 = 1e-4;
pub const DELTA_THRESHOLD: f64 = 1.25;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("prediction, ground truth and mask shapes differ")]
    ShapeMismatch,
    #[error("no valid pixels")]
    NoValidPixels,
    #[error("{count} valid ground-truth pixels are below {min} and no pixels remain for the ratio")]
    ZeroGroundTruth { count: usize, min: f64 },
    #[error("non-positive value at {count} pixels; ratios are undefined")]
    NonPositive { count: usize },
    #[error("sample {sample} has {got} predictions, expected {expected}")]
    Ragged {
        sample: usize,
        got: usize,
        expected: usize,
    },
    #[error("sample {0} has no predictions")]
    EmptyGroup(usize),
    #[error("no samples to aggregate")]
    NoSamples,
    #[error("csv error: {0}")]
    Csv(String),
}

fn valid_pairs<'a>(
    pred: &'a [f64],
    gt: &'a [f64],
    valid: &'a [bool],
) -> Result<impl Iterator<Item = (f64, f64)> + Clone + 'a, MetricsError> {
    if pred.len() != gt.len() || gt.len() != valid.len() {
        return Err(MetricsError::ShapeMismatch);
    }
    if !valid.iter().any(|&v| v) {
        return Err(MetricsError::NoValidPixels);
    }
    Ok(pred
        .iter()
        .zip(gt)
        .zip(valid)
        .filter(|(_, &v)| v)
        .map(|((&p, &g), _)| (p, g)))
}

/// Mean absolute error over valid pixels.
pub fn mae(pred: &[f64], gt: &[f64], valid: &[bool]) -> Result<f64, MetricsError> {
    let pairs = valid_pairs(pred, gt, valid)?;
    let (sum, n) = pairs.fold((0.0, 0usize), |(s, n), (p, g)| (s + (g - p).abs(), n + 1));
    Ok(sum / n as f64)
}

/// MAE divided by the ground-truth disparity range plus `eps`.
pub fn nmae(pred: &[f64], gt: &[f64], valid: &[bool], eps: f64) -> Result<f64, MetricsError> {
    let m = mae(pred, gt, valid)?;
    let pairs = valid_pairs(pred, gt, valid)?;
    let (lo, hi) = pairs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, g)| {
        (lo.min(g), hi.max(g))
    });
    Ok(m / (hi - lo + eps))
}

/// Mean of `|y - ŷ| / y`; pixels with `y < 1e-4` are skipped and counted.
/// Returns the value and the number of skipped pixels.
pub fn absrel(pred: &[f64], gt: &[f64], valid: &[bool]) -> Result<(f64, usize), MetricsError> {
    let pairs = valid_pairs(pred, gt, valid)?;
    let (mut sum, mut n, mut skipped) = (0.0, 0usize, 0usize);
    for (p, g) in pairs {
        if g < ABSREL_MIN_GT {
            skipped += 1;
            continue;
        }
        sum += (g - p).abs() / g;
        n += 1;
    }
    if skipped > 0 {
        log::warn!("absrel: {skipped} ground-truth pixels below {ABSREL_MIN_GT} excluded");
    }
    if n == 0 {
        return Err(MetricsError::ZeroGroundTruth {
            count: skipped,
            min: ABSREL_MIN_GT,
        });
    }
    Ok((sum / n as f64, skipped))
}

/// Fraction of valid pixels with `max(ŷ/y, y/ŷ) < threshold`. All values must
/// be strictly positive.
pub fn delta_accuracy(pred: &[f64], gt: &[f64], valid: &[bool], threshold: f64) -> Result<f64, MetricsError> {
    let pairs = valid_pairs(pred, gt, valid)?;
    let bad = pairs.clone().filter(|&(p, g)| !(p > 0.0 && g > 0.0)).count();
    if bad > 0 {
        return Err(MetricsError::NonPositive { count: bad });
    }
    let (hits, n) = pairs.fold((0usize, 0usize), |(h, n), (p, g)| {
        let ratio = (p / g).max(g / p);
        (h + usize::from(ratio < threshold), n + 1)
    });
    Ok(hits as f64 / n as f64)
}

/// All four metrics for one prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub nmae: f64,
    pub absrel: f64,
    pub delta_125: f64,
    pub valid_pixels: usize,
    /// Pixels left out of AbsRel and delta by the small-disparity guard.
    pub excluded_pixels: usize,
}

/// Evaluate one prediction against ground truth over `valid` pixels.
///
/// AbsRel and delta use the pixels with ground truth at or above `1e-4`;
/// a non-positive prediction there counts as a delta miss.
pub fn evaluate(pred: &[f64], gt: &[f64], valid: &[bool]) -> Result<MetricsReport, MetricsError> {
    let mae_v = mae(pred, gt, valid)?;
    let nmae_v = nmae(pred, gt, valid, NMAE_EPS)?;
    let (absrel_v, excluded) = absrel(pred, gt, valid)?;
    let pairs = valid_pairs(pred, gt, valid)?;
    let (hits, n) = pairs
        .filter(|&(_, g)| g >= ABSREL_MIN_GT)
        .fold((0usize, 0usize), |(h, n), (p, g)| {
            let ok = p > 0.0 && (p / g).max(g / p) < DELTA_THRESHOLD;
            (h + usize::from(ok), n + 1)
        });
    Ok(MetricsReport {
        mae: mae_v,
        nmae: nmae_v,
        absrel: absrel_v,
        delta_125: hits as f64 / n as f64,
        valid_pixels: valid.iter().filter(|&&v| v).count(),
        excluded_pixels: excluded,
    })
}

/// Evaluate a predicted disparity image against ground truth on `mask`.
pub fn evaluate_images(pred: &DepthImage, gt: &DepthImage, mask: &Grid<bool>) -> Result<MetricsReport, MetricsError> {
    if !pred.values.same_shape(&gt.values) || !gt.values.same_shape(mask) {
        return Err(MetricsError::ShapeMismatch);
    }
    evaluate(pred.values.as_slice(), gt.values.as_slice(), mask.as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    Average,
    Best,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Standard error of the mean over samples.
    pub std_err: f64,
    /// Sample standard deviation over samples.
    pub std_dev: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std_dev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_err: std_dev / n.sqrt(),
            std_dev,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub mode: AggregationMode,
    /// One reduced report per sample.
    pub per_sample: Vec<MetricsReport>,
    pub mae: Summary,
    pub nmae: Summary,
    pub absrel: Summary,
    pub delta_125: Summary,
}

/// Reduce `K` predictions per sample, then summarize over samples.
///
/// `Average` takes the mean of every metric over the K predictions. `Best`
/// keeps the single prediction with the lowest NMAE and reports all of its
/// metrics.
pub fn aggregate(groups: &[Vec<MetricsReport>], mode: AggregationMode) -> Result<AggregateReport, MetricsError> {
    let k = groups.first().ok_or(MetricsError::NoSamples)?.len();
    for (i, g) in groups.iter().enumerate() {
        if g.is_empty() {
            return Err(MetricsError::EmptyGroup(i));
        }
        if g.len() != k {
            return Err(MetricsError::Ragged {
                sample: i,
                got: g.len(),
                expected: k,
            });
        }
    }
    let per_sample: Vec<MetricsReport> = groups
        .iter()
        .map(|g| match mode {
            AggregationMode::Average => {
                let n = g.len() as f64;
                let mean = |f: fn(&MetricsReport) -> f64| g.iter().map(f).sum::<f64>() / n;
                MetricsReport {
                    mae: mean(|r| r.mae),
                    nmae: mean(|r| r.nmae),
                    absrel: mean(|r| r.absrel),
                    delta_125: mean(|r| r.delta_125),
                    valid_pixels: g[0].valid_pixels,
                    excluded_pixels: g[0].excluded_pixels,
                }
            }
            AggregationMode::Best => *g
                .iter()
                .reduce(|best, r| if r.nmae < best.nmae { r } else { best })
                .expect("group is non-empty"),
        })
        .collect();
    let column = |f: fn(&MetricsReport) -> f64| Summary::of(&per_sample.iter().map(f).collect::<Vec<_>>());
    Ok(AggregateReport {
        mode,
        mae: column(|r| r.mae),
        nmae: column(|r| r.nmae),
        absrel: column(|r| r.absrel),
        delta_125: column(|r| r.delta_125),
        per_sample,
    })
}

/// Write one row per (label, report): NMAE, AbsRel and delta as mean ± SE,
/// followed by MAE and the standard deviations.
pub fn write_table_csv<W: Write>(out: W, rows: &[(String, AggregateReport)]) -> Result<(), MetricsError> {
    let err = |e: csv::Error| MetricsError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "model",
        "mode",
        "samples",
        "nmae",
        "nmae_se",
        "absrel",
        "absrel_se",
        "delta_125",
        "delta_125_se",
        "mae",
        "mae_se",
        "nmae_sd",
        "absrel_sd",
        "delta_125_sd",
        "mae_sd",
    ])
    .map_err(err)?;
    for (label, r) in rows {
        let mode = match r.mode {
            AggregationMode::Average => "average",
            AggregationMode::Best => "best",
        };
        let f = |v: f64| format!("{v:.6}");
        w.write_record([
            label.clone(),
            mode.to_string(),
            r.per_sample.len().to_string(),
            f(r.nmae.mean),
            f(r.nmae.std_err),
            f(r.absrel.mean),
            f(r.absrel.std_err),
            f(r.delta_125.mean),
            f(r.delta_125.std_err),
            f(r.mae.mean),
            f(r.mae.std_err),
            f(r.nmae.std_dev),
            f(r.absrel.std_dev),
            f(r.delta_125.std_dev),
            f(r.mae.std_dev),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| MetricsError::Csv(e.to_string()))
}
