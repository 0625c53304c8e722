//! Drivers behind the `wiredepth` binary: dataset generation, shape splits,
//! benchmark evaluation, wireframe fitting and the toy diffusion runs.
//!
//! Every driver takes a [`RunConfig`] and is a pure function of it and the
//! input files. Parallel work items draw their randomness from seeds derived
//! from `(seed, shape id, view id)`, so outputs do not depend on the number
//! of workers.

mod benchmark;
mod dataset;
mod diffuse;
mod fit;
mod split;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{DEFAULT_HALF_WIDTH, DEFAULT_RESOLUTION};
use crate::complexity::ComplexityError;
use crate::depth::{DepthError, DisparityConfig, DEFAULT_Z_FAR, DEFAULT_Z_NEAR};
use crate::diffusion::DiffusionError;
use crate::metrics::MetricsError;
use crate::partial::PartialError;
use crate::reconstruct::ReconstructError;
use crate::render::{RenderError, DEFAULT_STROKE_RADIUS};
use crate::wireframe::{WireFormat, WireframeError, WireframeGraph};

pub use benchmark::{
    benchmark_plan, cmd_benchmark, prediction_path, write_benchmark_inputs, write_benchmark_tables,
    write_mean_baseline, BenchmarkReport, BenchmarkView, StratifiedRow, ViewResult, APR_BOUNDS, BENCHMARK_JITTER_DEGREES,
    COMPLEXITY_BOUNDS,
};
pub use dataset::{cmd_dataset, read_manifest, view_plan, DatasetSummary, ManifestEntry, ViewTask, MANIFEST_FILE};
pub use diffuse::{load_training_pairs, sample_to_files};
pub use fit::{cmd_fit, read_camera, FitSummary};
pub use split::{assign_splits, hash_split, read_split_csv, split_counts, write_split_csv, DEFAULT_RATIOS};

/// Environment variable that overrides the output root.
pub const OUTPUT_ROOT_ENV: &str = "WIREDEPTH_OUTPUT";

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad input data or arguments.
    #[error("{0}")]
    Data(String),
    /// A file could not be parsed.
    #[error("format error: {0}")]
    Format(String),
    /// A numerical fault or broken invariant inside the library.
    #[error("internal fault: {0}")]
    Internal(String),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl PipelineError {
    /// Process exit code: 1 data, 2 format, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Data(_) | PipelineError::Io { .. } => 1,
            PipelineError::Format(_) => 2,
            PipelineError::Internal(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<DepthError> for PipelineError {
    fn from(e: DepthError) -> Self {
        match e {
            DepthError::Format(_) | DepthError::WrongSpace { .. } => PipelineError::Format(e.to_string()),
            DepthError::Io { path, source } => PipelineError::Io { path, source },
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<WireframeError> for PipelineError {
    fn from(e: WireframeError) -> Self {
        match e {
            WireframeError::Parse { .. } => PipelineError::Format(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<DiffusionError> for PipelineError {
    fn from(e: DiffusionError) -> Self {
        match e {
            DiffusionError::TrainingFault { .. }
            | DiffusionError::SamplerFault { .. }
            | DiffusionError::NonConvergence(_) => PipelineError::Internal(e.to_string()),
            DiffusionError::Model(_) => PipelineError::Format(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<ReconstructError> for PipelineError {
    fn from(e: ReconstructError) -> Self {
        match e {
            ReconstructError::Graph(_) => PipelineError::Internal(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for PipelineError {
            fn from(e: $t) -> Self {
                PipelineError::Data(e.to_string())
            }
        }
    )*};
}
data_error!(RenderError, PartialError, MetricsError, ComplexityError);

impl From<serde_json::Error> for PipelineError {
    fn from(e: serde_json::Error) -> Self {
        PipelineError::Format(e.to_string())
    }
}

impl From<csv::Error> for PipelineError {
    fn from(e: csv::Error) -> Self {
        PipelineError::Format(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Split::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which partial-depth condition each dataset view carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartialPolicy {
    /// Empty half the time, otherwise a BFS reveal with `k ~ U[0.1, 0.9]`.
    Training,
    /// Never attach a partial pair.
    None,
    /// Always reveal fraction `k`.
    Fixed { k: f64 },
}

/// Every knob of a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub resolution: usize,
    pub stroke_radius: f64,
    pub views: usize,
    pub half_width: f64,
    /// Extra zoomed views per shape, as a fraction of `views`.
    pub zoom_fraction: f64,
    /// Only shapes at or above this curve complexity get zoomed views.
    pub zoom_min_complexity: u64,
    pub z_near: f64,
    pub z_far: f64,
    pub partial: PartialPolicy,
    pub seed: u64,
    pub split_seed: u64,
    pub split_ratios: [f64; 3],
    pub output_root: PathBuf,
    /// Worker threads; 0 uses one per core.
    pub jobs: usize,
    /// Largest tolerated fraction of unreadable shapes.
    pub max_skip_fraction: f64,
    /// Shapes with fewer edges are left out of the dataset.
    #[serde(default)]
    pub min_edges: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_RESOLUTION,
            stroke_radius: DEFAULT_STROKE_RADIUS,
            views: 100,
            half_width: DEFAULT_HALF_WIDTH,
            zoom_fraction: 0.1,
            zoom_min_complexity: 40,
            z_near: DEFAULT_Z_NEAR,
            z_far: DEFAULT_Z_FAR,
            partial: PartialPolicy::Training,
            seed: 0,
            split_seed: 0,
            split_ratios: DEFAULT_RATIOS,
            output_root: PathBuf::from("out"),
            jobs: 0,
            max_skip_fraction: 0.05,
            min_edges: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Data(m));
        if self.resolution < 16 {
            return bad(format!("resolution must be at least 16, got {}", self.resolution));
        }
        if !(self.stroke_radius >= 0.5) {
            return bad(format!("stroke radius must be at least 0.5, got {}", self.stroke_radius));
        }
        if !(self.half_width > 0.0) {
            return bad(format!("half-width must be positive, got {}", self.half_width));
        }
        if !(0.0..=1.0).contains(&self.zoom_fraction) {
            return bad(format!("zoom fraction must lie in [0, 1], got {}", self.zoom_fraction));
        }
        if let PartialPolicy::Fixed { k } = self.partial {
            if !(0.0..=1.0).contains(&k) {
                return bad(format!("partial fraction must lie in [0, 1], got {k}"));
            }
        }
        split::check_ratios(&self.split_ratios)?;
        self.disparity()?;
        Ok(())
    }

    pub fn disparity(&self) -> Result<DisparityConfig, PipelineError> {
        Ok(DisparityConfig::new(self.z_near, self.z_far)?)
    }

    /// Thread pool of `jobs` workers.
    pub fn pool(&self) -> Result<rayon::ThreadPool, PipelineError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| PipelineError::Internal(e.to_string()))
    }
}

/// A shape file found on disk; the id is the file stem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeSource {
    pub id: String,
    pub path: PathBuf,
}

fn shape_format(path: &Path) -> Option<WireFormat> {
    match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
        "json" => Some(WireFormat::WireJson),
        "obj" => Some(WireFormat::ObjLines),
        _ => None,
    }
}

/// WireJson (`.json`) and OBJ (`.obj`) files in `dir`, sorted by id.
pub fn list_shapes(dir: &Path) -> Result<Vec<ShapeSource>, PipelineError> {
    let rd = std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let path = entry.map_err(|e| PipelineError::io(dir, e))?.path();
        if !path.is_file() || shape_format(&path).is_none() {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        out.push(ShapeSource {
            id: id.to_string(),
            path: path.clone(),
        });
    }
    out.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.path.cmp(&b.path)));
    Ok(out)
}

/// Load a shape by extension and scale it into the unit sphere.
pub fn load_shape(path: &Path) -> Result<WireframeGraph, PipelineError> {
    let format = shape_format(path)
        .ok_or_else(|| PipelineError::Data(format!("{}: unknown shape extension", path.display())))?;
    let file = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let g = WireframeGraph::load(std::io::BufReader::new(file), format)
        .map_err(|e| PipelineError::from(e).context(path))?;
    Ok(g.normalize_to_unit_sphere()?)
}

/// Find `<dir>/<id>.json` or `<dir>/<id>.obj`.
pub fn find_shape(dir: &Path, id: &str) -> Result<PathBuf, PipelineError> {
    ["json", "obj"]
        .iter()
        .map(|ext| dir.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
        .ok_or_else(|| PipelineError::Data(format!("shape {id} not found in {}", dir.display())))
}

impl PipelineError {
    fn context(self, path: &Path) -> Self {
        let p = path.display();
        match self {
            PipelineError::Data(m) => PipelineError::Data(format!("{p}: {m}")),
            PipelineError::Format(m) => PipelineError::Format(format!("{p}: {m}")),
            PipelineError::Internal(m) => PipelineError::Internal(format!("{p}: {m}")),
            io => io,
        }
    }
}

/// Path relative to `root` with `/` separators, as stored in manifests.
pub(crate) fn relative(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

pub(crate) fn create_dir(path: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(path).map_err(|e| PipelineError::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    std::fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}
