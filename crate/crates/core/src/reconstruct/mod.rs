//! Lifting a sketch and its disparity back to 3D and fitting a line
//! wireframe to the result.
//!
//! The pipeline is: [`backproject`] every stroke pixel to a point,
//! [`extract_topology`] from the thinned mask, then [`fit_wireframe`] a
//! polyline of total-least-squares segments to each skeleton path.

mod clearance;
mod fit;
mod skeleton;

use std::io::Write;

use thiserror::Error;

use crate::camera::OrthoCamera;
use crate::depth::{DepthError, DisparityConfig};
use crate::grid::Grid;
use crate::Vec3;

pub use clearance::ViewClearance;
pub use fit::{fit_wireframe, point_segment_distance, tls_line, FitConfig, FittedWireframe};
pub use skeleton::{extract_topology, thin, Path2, SkeletonGraph, SkeletonNode, TopologyConfig};

#[derive(Debug, Error)]
pub enum ReconstructError {
    #[error("image is {got:?}, camera expects {expected:?}")]
    SizeMismatch {
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("disparity at ({x}, {y}) is {value}, outside [0, 1]")]
    BadDisparity { x: usize, y: usize, value: f64 },
    #[error(transparent)]
    Config(#[from] DepthError),
    #[error("no path has enough support to fit")]
    NothingFitted,
    #[error("fitted graph is invalid: {0}")]
    Graph(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One 3D point per masked pixel, with its source pixel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub pixels: Vec<(usize, usize)>,
    pub width: usize,
    pub height: usize,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Point index per pixel.
    pub fn index_grid(&self) -> Grid<Option<usize>> {
        let mut g = Grid::new(self.width, self.height, None);
        for (i, &(x, y)) in self.pixels.iter().enumerate() {
            g.set(x, y, Some(i));
        }
        g
    }

    /// ASCII PLY with `x y z` and the source pixel `u v` per vertex.
    pub fn write_ply<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "ply")?;
        writeln!(out, "format ascii 1.0")?;
        writeln!(out, "element vertex {}", self.points.len())?;
        for p in ["x", "y", "z"] {
            writeln!(out, "property double {p}")?;
        }
        writeln!(out, "property int u")?;
        writeln!(out, "property int v")?;
        writeln!(out, "end_header")?;
        for (p, (u, v)) in self.points.iter().zip(&self.pixels) {
            writeln!(out, "{} {} {} {u} {v}", p.x, p.y, p.z)?;
        }
        Ok(())
    }
}

/// Lift every masked pixel centre to the depth encoded by its disparity.
pub fn backproject(
    mask: &Grid<bool>,
    disparity: &Grid<f64>,
    cam: &OrthoCamera,
    cfg: &DisparityConfig,
) -> Result<PointCloud, ReconstructError> {
    cfg.validate()?;
    let expected = (cam.width, cam.height);
    for got in [(mask.width(), mask.height()), (disparity.width(), disparity.height())] {
        if got != expected {
            return Err(ReconstructError::SizeMismatch { got, expected });
        }
    }
    let mut cloud = PointCloud {
        width: cam.width,
        height: cam.height,
        ..Default::default()
    };
    for y in 0..cam.height {
        for x in 0..cam.width {
            if !*mask.get(x, y) {
                continue;
            }
            let d = *disparity.get(x, y);
            if !(0.0..=1.0).contains(&d) {
                return Err(ReconstructError::BadDisparity { x, y, value: d });
            }
            let z = cfg.depth(d);
            cloud.points.push(cam.unproject(x as f64 + 0.5, y as f64 + 0.5, z));
            cloud.pixels.push((x, y));
        }
    }
    Ok(cloud)
}
