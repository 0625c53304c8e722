//! Depth PNG + mask + camera sidecar to a fitted wireframe and point cloud.

use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use super::{create_dir, write_file, PipelineError};
use crate::camera::OrthoCamera;
use crate::depth::{depth_to_disparity, read_depth_file, read_mask_file, DepthSpace};
use crate::reconstruct::{backproject, extract_topology, fit_wireframe, FitConfig, PointCloud, TopologyConfig};

/// WireJson for a fit with no edges.
const EMPTY_WIREJSON: &str = r#"{"vertices":[],"edges":[]}"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub points: usize,
    pub vertices: usize,
    pub edges: usize,
    /// Residuals in pixel footprints.
    pub mean_residual: f64,
    pub max_residual: f64,
    pub wirejson: PathBuf,
    pub ply: PathBuf,
}

pub fn read_camera(path: &Path) -> Result<OrthoCamera, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let cam: OrthoCamera =
        serde_json::from_str(&text).map_err(|e| PipelineError::Format(format!("{}: {e}", path.display())))?;
    cam.validate()
        .map_err(|e| PipelineError::Format(format!("{}: {e}", path.display())))?;
    Ok(cam)
}

/// Lift `depth` under `mask` through the camera in `camera_path`, fit a line
/// wireframe, and write `fitted.json` and `cloud.ply` into `out`.
///
/// An empty mask writes an empty wireframe and cloud and logs a warning.
pub fn cmd_fit(
    depth: &Path,
    mask_path: &Path,
    camera_path: &Path,
    cfg: &FitConfig,
    out: &Path,
) -> Result<FitSummary, PipelineError> {
    let cam = read_camera(camera_path)?;
    let mut img = read_depth_file(depth)?;
    if img.space == DepthSpace::MetricDepth {
        img = depth_to_disparity(&img, &img.config)?;
    }
    let mask = read_mask_file(mask_path)?;

    create_dir(out)?;
    let wirejson = out.join("fitted.json");
    let ply = out.join("cloud.ply");
    let cloud = backproject(&mask, &img.values, &cam, &img.config)?;
    let write_ply = |cloud: &PointCloud| {
        let mut buf = Vec::new();
        cloud.write_ply(&mut buf).expect("write to vec");
        write_file(&ply, buf)
    };
    write_ply(&cloud)?;

    if cloud.is_empty() {
        warn!("mask {} is empty; writing empty outputs", mask_path.display());
        write_file(&wirejson, EMPTY_WIREJSON)?;
        return Ok(FitSummary {
            points: 0,
            vertices: 0,
            edges: 0,
            mean_residual: 0.0,
            max_residual: 0.0,
            wirejson,
            ply,
        });
    }

    let topo = extract_topology(&mask, &TopologyConfig::for_stroke_radius(cfg.stroke_radius));
    let fit = fit_wireframe(&topo, &cloud, &cam, cfg)?;
    write_file(&wirejson, fit.graph.to_wirejson())?;
    let fp = cam.footprint();
    let n = fit.residuals.len().max(1) as f64;
    Ok(FitSummary {
        points: cloud.len(),
        vertices: fit.graph.vertices().len(),
        edges: fit.graph.edges().len(),
        mean_residual: fit.residuals.iter().sum::<f64>() / n / fp,
        max_residual: fit.residuals.iter().fold(0.0, |a: f64, &b| a.max(b)) / fp,
        wirejson,
        ply,
    })
}
