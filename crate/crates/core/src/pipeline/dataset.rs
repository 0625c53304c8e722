//! Rendering a directory of shapes into aligned sketch / depth / partial
//! depth files plus a JSON-lines manifest.

use std::collections::BTreeMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{create_dir, hash_split, list_shapes, load_shape, relative, PartialPolicy, PipelineError, RunConfig, Split};
use crate::camera::{sample_hemisphere_views, zoom_augment, OrthoCamera};
use crate::complexity::curve_complexity;
use crate::depth::{write_depth_file, write_mask_file};
use crate::partial::{bfs_partial_mask, training_draw, PartialDepthPair};
use crate::render::{rasterize, Provenance};
use crate::rng::{derive, label};
use crate::wireframe::WireframeGraph;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// One rendered view. Paths are relative to the output root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub shape_id: String,
    pub view_id: String,
    pub split: Split,
    pub seed: u64,
    pub camera: OrthoCamera,
    pub zoomed: bool,
    /// Target reveal fraction, `None` for an empty condition.
    pub k: Option<f64>,
    pub mask: String,
    pub depth: String,
    pub partial: Option<String>,
    pub partial_mask: Option<String>,
}

/// A view to render for one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewTask {
    pub view_id: String,
    pub camera: OrthoCamera,
    pub zoomed: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Default)]
pub struct DatasetSummary {
    pub entries: Vec<ManifestEntry>,
    pub shapes: usize,
    /// `(path, reason)` for every shape that could not be used.
    pub skipped: Vec<(PathBuf, String)>,
    /// Shapes left out by `min_edges`.
    pub filtered: usize,
    pub manifest: PathBuf,
}

impl DatasetSummary {
    pub fn skip_fraction(&self) -> f64 {
        let total = self.shapes + self.skipped.len();
        if total == 0 {
            0.0
        } else {
            self.skipped.len() as f64 / total as f64
        }
    }

    pub fn with_partial(&self) -> usize {
        self.entries.iter().filter(|e| e.k.is_some()).count()
    }
}

/// Cameras for one shape: `views` hemisphere samples, plus zoomed copies of
/// the first few for shapes complex enough to qualify.
pub fn view_plan(shape_id: &str, g: &WireframeGraph, cfg: &RunConfig) -> Vec<ViewTask> {
    let shape = label(shape_id);
    let base = sample_hemisphere_views(
        cfg.views,
        derive(cfg.seed, &[shape, label("views")]),
        cfg.half_width,
        cfg.resolution,
    );
    let task = |view_id: String, camera: OrthoCamera, zoomed: bool| ViewTask {
        seed: derive(cfg.seed, &[shape, label(&view_id)]),
        view_id,
        camera,
        zoomed,
    };
    let mut out: Vec<ViewTask> = base
        .iter()
        .enumerate()
        .map(|(i, cam)| task(format!("v{i:03}"), cam.clone(), false))
        .collect();
    if cfg.views > 0 && cfg.zoom_fraction > 0.0 && curve_complexity(g) >= cfg.zoom_min_complexity {
        let n = (cfg.views as f64 * cfg.zoom_fraction).round() as usize;
        for j in 0..n {
            let cam = zoom_augment(&base[j % base.len()], g, derive(cfg.seed, &[shape, label("zoom"), j as u64]));
            out.push(task(format!("z{j:03}"), cam, true));
        }
    }
    out
}

fn partial_for(
    policy: PartialPolicy,
    bundle: &crate::render::RenderBundle,
    g: &WireframeGraph,
    seed: u64,
) -> Result<Option<(f64, PartialDepthPair)>, PipelineError> {
    let seed = derive(seed, &[label("partial")]);
    let draw = match policy {
        PartialPolicy::None => None,
        PartialPolicy::Training => training_draw(seed),
        PartialPolicy::Fixed { k } => Some((k, seed)),
    };
    match draw {
        None => Ok(None),
        Some((k, s)) => Ok(Some((k, bfs_partial_mask(bundle, g, k, s)?))),
    }
}

fn render_entry(
    cfg: &RunConfig,
    shape_id: &str,
    split: Split,
    g: &WireframeGraph,
    task: &ViewTask,
) -> Result<ManifestEntry, PipelineError> {
    let root = &cfg.output_root;
    let disparity = cfg.disparity()?;
    let bundle = rasterize(g, &task.camera, cfg.stroke_radius, &disparity)?.with_provenance(Provenance {
        shape_id: shape_id.to_string(),
        view_id: task.view_id.clone(),
        seed: task.seed,
    });
    let dir = root.join(split.as_str()).join(shape_id);
    let file = |suffix: &str| dir.join(format!("{}_{suffix}.png", task.view_id));

    let mask = file("mask");
    write_mask_file(&mask, &bundle.mask)?;
    let depth = file("depth");
    write_depth_file(&depth, &bundle.disparity)?;

    let partial = partial_for(cfg.partial, &bundle, g, task.seed)?;
    let (k, partial_path, partial_mask_path) = match partial {
        None => (None, None, None),
        Some((k, pair)) => {
            let p = file("partial");
            write_depth_file(&p, &pair.partial)?;
            let m = file("partialmask");
            write_mask_file(&m, &pair.mask)?;
            (Some(k), Some(relative(root, &p)), Some(relative(root, &m)))
        }
    };
    Ok(ManifestEntry {
        shape_id: shape_id.to_string(),
        view_id: task.view_id.clone(),
        split,
        seed: task.seed,
        camera: task.camera.clone(),
        zoomed: task.zoomed,
        k,
        mask: relative(root, &mask),
        depth: relative(root, &depth),
        partial: partial_path,
        partial_mask: partial_mask_path,
    })
}

/// Render every shape in `shapes_dir` into `cfg.output_root`.
///
/// Splits come from `splits` when given (shapes missing from it are
/// skipped), otherwise from [`hash_split`]. Unreadable shapes are skipped
/// and reported in the summary; the caller decides whether the skip rate is
/// acceptable. The manifest is sorted by shape and view and is byte-identical
/// for any worker count.
pub fn cmd_dataset(
    cfg: &RunConfig,
    shapes_dir: &Path,
    splits: Option<&BTreeMap<String, Split>>,
) -> Result<DatasetSummary, PipelineError> {
    cfg.validate()?;
    let sources = list_shapes(shapes_dir)?;
    if sources.is_empty() {
        return Err(PipelineError::Data(format!("no shape files in {}", shapes_dir.display())));
    }
    let mut summary = DatasetSummary {
        manifest: cfg.output_root.join(MANIFEST_FILE),
        ..Default::default()
    };
    let mut seen = BTreeMap::new();
    let mut shapes = Vec::new();
    for src in sources {
        if let Some(first) = seen.insert(src.id.clone(), src.path.clone()) {
            let reason = format!("duplicate shape id {} (also {})", src.id, first.display());
            warn!("skipping {}: {reason}", src.path.display());
            summary.skipped.push((src.path, reason));
            continue;
        }
        let split = match splits {
            Some(map) => match map.get(&src.id) {
                Some(s) => *s,
                None => {
                    warn!("skipping {}: not in split assignment", src.path.display());
                    summary.skipped.push((src.path, "not in split assignment".into()));
                    continue;
                }
            },
            None => hash_split(&src.id, &cfg.split_ratios, cfg.split_seed),
        };
        match load_shape(&src.path) {
            Ok(g) if g.edges().len() < cfg.min_edges => {
                debug!("filtering {}: {} edges", src.id, g.edges().len());
                summary.filtered += 1;
            }
            Ok(g) => shapes.push((src.id, split, g)),
            Err(e) => {
                warn!("skipping {}: {e}", src.path.display());
                summary.skipped.push((src.path, e.to_string()));
            }
        }
    }
    summary.shapes = shapes.len();

    let mut tasks = Vec::new();
    for (i, (id, split, g)) in shapes.iter().enumerate() {
        create_dir(&cfg.output_root.join(split.as_str()).join(id))?;
        tasks.extend(view_plan(id, g, cfg).into_iter().map(|t| (i, t)));
    }
    info!("rendering {} views of {} shapes", tasks.len(), shapes.len());

    let pool = cfg.pool()?;
    summary.entries = pool.install(|| {
        tasks
            .par_iter()
            .map(|(i, task)| {
                let (id, split, g) = &shapes[*i];
                render_entry(cfg, id, *split, g, task)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;

    let path = &summary.manifest;
    let file = std::fs::File::create(path).map_err(|e| PipelineError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for e in &summary.entries {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n").map_err(|e| PipelineError::io(path, e))?;
    }
    w.flush().map_err(|e| PipelineError::io(path, e))?;
    Ok(summary)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, PipelineError> {
    let file = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line)
            .map_err(|e| PipelineError::Format(format!("{} line {}: {e}", path.display(), n + 1)))?;
        out.push(entry);
    }
    Ok(out)
}
