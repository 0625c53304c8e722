//! Benchmark protocol: four jittered isometric views per test shape, K
//! predictions per view, Average and Best tables and APR / complexity
//! stratified error curves.

use std::io::Write;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, find_shape, load_shape, relative, write_file, PipelineError, RunConfig};
use crate::camera::{isometric_benchmark_views, OrthoCamera};
use crate::complexity::{score, stratify, AprConfig, ComplexityReport, StratifyKey};
use crate::depth::{
    code_disparity, depth_to_disparity, disparity_code, read_depth_file, write_depth_file, write_mask_file, DepthError,
    DepthImage, DepthSpace,
};
use crate::metrics::{aggregate, evaluate_images, write_table_csv, AggregateReport, AggregationMode, MetricsReport};
use crate::render::{rasterize, Provenance, RenderBundle};
use crate::rng::{derive, label};
use crate::wireframe::WireframeGraph;

pub const BENCHMARK_JITTER_DEGREES: f64 = 5.0;
/// Inner bin edges for the curve-complexity strata.
pub const COMPLEXITY_BOUNDS: [f64; 4] = [10.0, 20.0, 40.0, 80.0];
/// Inner bin edges for the APR strata.
pub const APR_BOUNDS: [f64; 4] = [0.02, 0.05, 0.1, 0.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkView {
    pub shape_id: String,
    pub view_id: String,
    pub camera: OrthoCamera,
}

/// Four views per shape, in id order.
pub fn benchmark_plan(shape_ids: &[String], cfg: &RunConfig) -> Vec<BenchmarkView> {
    shape_ids
        .iter()
        .flat_map(|id| {
            let seed = derive(cfg.seed, &[label(id), label("benchmark")]);
            isometric_benchmark_views(BENCHMARK_JITTER_DEGREES, seed, cfg.half_width, cfg.resolution)
                .into_iter()
                .enumerate()
                .map(move |(i, camera)| BenchmarkView {
                    shape_id: id.clone(),
                    view_id: format!("iso{i}"),
                    camera,
                })
        })
        .collect()
}

/// `<dir>/<shape>/<view>_<draw>.png`
pub fn prediction_path(dir: &Path, shape_id: &str, view_id: &str, draw: usize) -> PathBuf {
    dir.join(shape_id).join(format!("{view_id}_{draw}.png"))
}

/// Ground truth as stored on disk: disparities snapped to 16-bit codes.
fn render_ground_truth(
    cfg: &RunConfig,
    g: &WireframeGraph,
    view: &BenchmarkView,
) -> Result<RenderBundle, PipelineError> {
    let mut bundle = rasterize(g, &view.camera, cfg.stroke_radius, &cfg.disparity()?)?.with_provenance(Provenance {
        shape_id: view.shape_id.clone(),
        view_id: view.view_id.clone(),
        seed: cfg.seed,
    });
    let d = &mut bundle.disparity;
    for (v, ok) in d.values.as_mut_slice().iter_mut().zip(d.valid.as_slice()) {
        if *ok {
            *v = code_disparity(disparity_code(*v));
        }
    }
    Ok(bundle)
}

fn load_all(shapes_dir: &Path, ids: &[String]) -> Result<Vec<(String, WireframeGraph)>, PipelineError> {
    ids.iter()
        .map(|id| Ok((id.clone(), load_shape(&find_shape(shapes_dir, id)?)?)))
        .collect()
}

fn for_each_view<T: Send>(
    cfg: &RunConfig,
    shapes_dir: &Path,
    ids: &[String],
    f: impl Fn(&BenchmarkView, RenderBundle, &WireframeGraph) -> Result<T, PipelineError> + Sync,
) -> Result<Vec<T>, PipelineError> {
    cfg.validate()?;
    let shapes = load_all(shapes_dir, ids)?;
    let plan = benchmark_plan(ids, cfg);
    cfg.pool()?.install(|| {
        plan.par_iter()
            .enumerate()
            .map(|(i, view)| {
                let g = &shapes[i / 4].1;
                f(view, render_ground_truth(cfg, g, view)?, g)
            })
            .collect()
    })
}

/// Render the benchmark ground truth to `<out>/<shape>/<view>_{mask,depth}.png`
/// and list the views with their cameras in `<out>/benchmark.jsonl`.
pub fn write_benchmark_inputs(
    cfg: &RunConfig,
    shapes_dir: &Path,
    ids: &[String],
    out: &Path,
) -> Result<Vec<BenchmarkView>, PipelineError> {
    for id in ids {
        create_dir(&out.join(id))?;
    }
    let views = for_each_view(cfg, shapes_dir, ids, |view, bundle, _| {
        let dir = out.join(&view.shape_id);
        write_mask_file(&dir.join(format!("{}_mask.png", view.view_id)), &bundle.mask)?;
        write_depth_file(&dir.join(format!("{}_depth.png", view.view_id)), &bundle.disparity)?;
        Ok(view.clone())
    })?;
    let mut lines = Vec::new();
    for v in &views {
        serde_json::to_writer(&mut lines, v)?;
        lines.push(b'\n');
    }
    write_file(&out.join("benchmark.jsonl"), lines)?;
    Ok(views)
}

/// Write the per-image mean ground-truth disparity as every one of the
/// `draws` predictions: the constant-depth baseline.
pub fn write_mean_baseline(
    cfg: &RunConfig,
    shapes_dir: &Path,
    ids: &[String],
    predictions: &Path,
    draws: usize,
) -> Result<usize, PipelineError> {
    for id in ids {
        create_dir(&predictions.join(id))?;
    }
    let written = for_each_view(cfg, shapes_dir, ids, |view, bundle, _| {
        let gt = &bundle.disparity;
        let n = bundle.mask.count();
        let mean = if n == 0 {
            0.0
        } else {
            gt.values
                .as_slice()
                .iter()
                .zip(bundle.mask.as_slice())
                .filter(|(_, &m)| m)
                .map(|(v, _)| v)
                .sum::<f64>()
                / n as f64
        };
        let pred = DepthImage {
            values: bundle.mask.map(|&m| if m { mean } else { 0.0 }),
            valid: bundle.mask.clone(),
            config: gt.config,
            space: DepthSpace::NormalizedDisparity,
        };
        for k in 0..draws {
            write_depth_file(&prediction_path(predictions, &view.shape_id, &view.view_id, k), &pred)?;
        }
        Ok(draws)
    })?;
    Ok(written.iter().sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewResult {
    pub shape_id: String,
    pub view_id: String,
    pub complexity: ComplexityReport,
    pub draws: Vec<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub viewpoints: usize,
    pub draws: usize,
    /// Prediction files that were not found.
    pub missing: Vec<PathBuf>,
    /// Views with all draws present, in plan order.
    pub evaluated: Vec<ViewResult>,
    pub average: AggregateReport,
    pub best: AggregateReport,
}

impl BenchmarkReport {
    pub fn missing_fraction(&self) -> f64 {
        self.missing.len() as f64 / (self.viewpoints * self.draws).max(1) as f64
    }
}

fn read_prediction(path: &Path, gt: &DepthImage) -> Result<Option<DepthImage>, PipelineError> {
    match read_depth_file(path) {
        Ok(img) if img.space == DepthSpace::MetricDepth => Ok(Some(depth_to_disparity(&img, &gt.config)?)),
        Ok(img) => Ok(Some(img)),
        Err(DepthError::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Evaluate `draws` predictions per benchmark view of the `ids` shapes.
///
/// Views with a missing draw are left out of the tables and their missing
/// paths listed in the report; the caller decides whether the missing
/// fraction is acceptable.
pub fn cmd_benchmark(
    cfg: &RunConfig,
    shapes_dir: &Path,
    ids: &[String],
    predictions: &Path,
    draws: usize,
) -> Result<BenchmarkReport, PipelineError> {
    if draws == 0 {
        return Err(PipelineError::Data("need at least one prediction per view".into()));
    }
    let apr = AprConfig::default();
    let per_view = for_each_view(cfg, shapes_dir, ids, |view, bundle, g| {
        let mut reports = Vec::with_capacity(draws);
        let mut missing = Vec::new();
        for k in 0..draws {
            let path = prediction_path(predictions, &view.shape_id, &view.view_id, k);
            match read_prediction(&path, &bundle.disparity)? {
                Some(pred) => reports.push(evaluate_images(&pred, &bundle.disparity, &bundle.mask)?),
                None => missing.push(path),
            }
        }
        let result = ViewResult {
            shape_id: view.shape_id.clone(),
            view_id: view.view_id.clone(),
            complexity: score(&bundle, g, &apr),
            draws: reports,
        };
        Ok((result, missing))
    })?;

    let viewpoints = per_view.len();
    let mut missing = Vec::new();
    let mut evaluated = Vec::new();
    for (r, m) in per_view {
        if m.is_empty() {
            evaluated.push(r);
        } else {
            missing.extend(m);
        }
    }
    for m in &missing {
        warn!("missing prediction {}", relative(predictions, m));
    }
    let groups: Vec<Vec<MetricsReport>> = evaluated.iter().map(|r| r.draws.clone()).collect();
    Ok(BenchmarkReport {
        viewpoints,
        draws,
        missing,
        average: aggregate(&groups, AggregationMode::Average)?,
        best: aggregate(&groups, AggregationMode::Best)?,
        evaluated,
    })
}

/// One stratum of the error-versus-difficulty curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedRow {
    pub key: StratifyKey,
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_apr: f64,
    pub mean_complexity: f64,
    pub nmae_average: f64,
    pub nmae_best: f64,
    pub delta_average: f64,
    pub delta_best: f64,
}

impl BenchmarkReport {
    /// Per-bin means of the Average and Best per-view metrics.
    pub fn stratified(&self, key: StratifyKey, bounds: &[f64]) -> Result<Vec<StratifiedRow>, PipelineError> {
        let reports: Vec<ComplexityReport> = self.evaluated.iter().map(|r| r.complexity.clone()).collect();
        let bins = stratify(&reports, bounds, key)?;
        let mut sums = vec![[0.0f64; 4]; bins.len()];
        for (i, r) in reports.iter().enumerate() {
            let s = &mut sums[crate::complexity::bin_index(bounds, key.value(r))];
            let (a, b) = (&self.average.per_sample[i], &self.best.per_sample[i]);
            s[0] += a.nmae;
            s[1] += b.nmae;
            s[2] += a.delta_125;
            s[3] += b.delta_125;
        }
        Ok(bins
            .into_iter()
            .zip(sums)
            .map(|(b, s)| {
                let mean = |v: f64| if b.count == 0 { 0.0 } else { v / b.count as f64 };
                StratifiedRow {
                    key,
                    lower: b.lower,
                    upper: b.upper,
                    count: b.count,
                    mean_apr: b.mean_apr,
                    mean_complexity: b.mean_complexity,
                    nmae_average: mean(s[0]),
                    nmae_best: mean(s[1]),
                    delta_average: mean(s[2]),
                    delta_best: mean(s[3]),
                }
            })
            .collect())
    }
}

/// Write `table.csv` (Average and Best rows), `stratified.csv` and, when
/// predictions were missing, `missing.txt` into `out`.
pub fn write_benchmark_tables(report: &BenchmarkReport, out: &Path, model: &str) -> Result<(), PipelineError> {
    create_dir(out)?;
    let mut table = Vec::new();
    write_table_csv(
        &mut table,
        &[
            (model.to_string(), report.average.clone()),
            (model.to_string(), report.best.clone()),
        ],
    )?;
    write_file(&out.join("table.csv"), table)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "key",
        "lower",
        "upper",
        "count",
        "mean_apr",
        "mean_complexity",
        "nmae_average",
        "nmae_best",
        "delta_125_average",
        "delta_125_best",
    ])?;
    for (key, bounds) in [
        (StratifyKey::Apr, &APR_BOUNDS[..]),
        (StratifyKey::Complexity, &COMPLEXITY_BOUNDS[..]),
    ] {
        for r in report.stratified(key, bounds)? {
            let name = match key {
                StratifyKey::Apr => "apr",
                StratifyKey::Complexity => "complexity",
            };
            let f = |v: f64| format!("{v:.6}");
            w.write_record([
                name.to_string(),
                f(r.lower),
                f(r.upper),
                r.count.to_string(),
                f(r.mean_apr),
                f(r.mean_complexity),
                f(r.nmae_average),
                f(r.nmae_best),
                f(r.delta_average),
                f(r.delta_best),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::Internal(e.to_string()))?;
    write_file(&out.join("stratified.csv"), bytes)?;

    if !report.missing.is_empty() {
        let mut text = Vec::new();
        for m in &report.missing {
            writeln!(text, "{}", m.display()).expect("write to vec");
        }
        write_file(&out.join("missing.txt"), text)?;
    }
    Ok(())
}
