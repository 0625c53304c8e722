//! Orthographic cameras and viewpoint sampling.

use std::f64::consts::{FRAC_PI_4, TAU};

use nalgebra::{Rotation3, Unit};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::seeded;
use crate::wireframe::WireframeGraph;
use crate::Vec3;

/// Default eye distance from the unit-sphere centre.
pub const DEFAULT_DISTANCE: f64 = 1.5;
/// Default half-width of the view window: the unit sphere plus a small margin.
pub const DEFAULT_HALF_WIDTH: f64 = 1.05;
pub const DEFAULT_RESOLUTION: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("view direction must be a non-zero finite vector")]
    BadView,
    #[error("half-width must be positive, got {0}")]
    BadHalfWidth(f64),
    #[error("image must be at least 16x16, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("camera distance must be positive, got {0}")]
    BadDistance(f64),
}

/// Orthographic camera looking at the origin along `view`.
///
/// The eye sits at `-distance * view`; camera depth of a point `p` is
/// `p·view + distance`. Image columns grow along `right = view × up`, rows
/// grow downward (against `up`). Pixels are square with side
/// [`footprint`](Self::footprint) model units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoCamera {
    pub view: [f64; 3],
    pub up: [f64; 3],
    pub half_width: f64,
    pub principal: [f64; 2],
    pub width: usize,
    pub height: usize,
    pub distance: f64,
}

impl OrthoCamera {
    /// Build a camera from a view direction; `up` is the world z axis (or y
    /// when looking along z) made orthogonal to `view`.
    pub fn looking(view: Vec3, half_width: f64, width: usize, height: usize) -> Result<Self, CameraError> {
        let n = view.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(CameraError::BadView);
        }
        let view = view / n;
        let world_up = if view.z.abs() > 0.999 {
            Vec3::y()
        } else {
            Vec3::z()
        };
        let up = (world_up - view * world_up.dot(&view)).normalize();
        let cam = Self {
            view: view.into(),
            up: up.into(),
            half_width,
            principal: [0.0, 0.0],
            width,
            height,
            distance: DEFAULT_DISTANCE,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let view = self.view();
        let up = self.up();
        if (view.norm() - 1.0).abs() > 1e-9 || (up.norm() - 1.0).abs() > 1e-9 || view.dot(&up).abs() > 1e-9 {
            return Err(CameraError::BadView);
        }
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(CameraError::BadHalfWidth(self.half_width));
        }
        if self.width < 16 || self.height < 16 {
            return Err(CameraError::TooSmall {
                width: self.width,
                height: self.height,
            });
        }
        if !(self.distance > 0.0) {
            return Err(CameraError::BadDistance(self.distance));
        }
        Ok(())
    }

    pub fn with_resolution(mut self, width: usize, height: usize) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn with_distance(mut self, distance: f64) -> Self {
        self.distance = distance;
        self
    }

    #[inline]
    pub fn view(&self) -> Vec3 {
        Vec3::from(self.view)
    }

    #[inline]
    pub fn up(&self) -> Vec3 {
        Vec3::from(self.up)
    }

    #[inline]
    pub fn right(&self) -> Vec3 {
        self.view().cross(&self.up())
    }

    pub fn eye(&self) -> Vec3 {
        -self.view() * self.distance
    }

    /// Model-space side length of one pixel.
    #[inline]
    pub fn footprint(&self) -> f64 {
        2.0 * self.half_width / self.width as f64
    }

    /// Half-height of the view window in model units.
    pub fn half_height(&self) -> f64 {
        self.footprint() * self.height as f64 / 2.0
    }

    /// Project to continuous pixel coordinates `(x, y)` and camera depth.
    /// Pixel `(i, j)` has its centre at `(i + 0.5, j + 0.5)`.
    #[inline]
    pub fn project(&self, p: &Vec3) -> (f64, f64, f64) {
        let fp = self.footprint();
        let sx = p.dot(&self.right()) - self.principal[0];
        let sy = p.dot(&self.up()) - self.principal[1];
        let x = (sx + self.half_width) / fp;
        let y = (self.half_height() - sy) / fp;
        (x, y, p.dot(&self.view()) + self.distance)
    }

    /// Inverse of [`project`](Self::project).
    pub fn unproject(&self, x: f64, y: f64, depth: f64) -> Vec3 {
        let fp = self.footprint();
        let sx = x * fp - self.half_width + self.principal[0];
        let sy = self.half_height() - y * fp + self.principal[1];
        self.right() * sx + self.up() * sy + self.view() * (depth - self.distance)
    }

    /// Apply a rigid rotation to the camera frame (the look-at centre stays at
    /// the origin).
    pub fn rotated(&self, rot: &Rotation3<f64>) -> Self {
        let mut c = self.clone();
        c.view = (rot * self.view()).into();
        c.up = (rot * self.up()).into();
        c
    }
}

/// Direction with polar angle measured from +z.
fn direction(azimuth: f64, z: f64) -> Vec3 {
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * azimuth.cos(), r * azimuth.sin(), z)
}

/// `n` cameras with view directions uniform by solid angle on the `z ≥ 0`
/// hemisphere: azimuth `U[0, 2π)`, `z = cos(polar) ~ U[0, 1]`.
pub fn sample_hemisphere_views(n: usize, seed: u64, half_width: f64, resolution: usize) -> Vec<OrthoCamera> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| {
            let az = rng.gen_range(0.0..TAU);
            let z: f64 = rng.gen_range(0.0..1.0);
            OrthoCamera::looking(direction(az, z), half_width, resolution, resolution)
                .expect("sampled view is a unit vector")
        })
        .collect()
}

/// Elevation of the isometric view above the horizon, `atan(1/√2)`.
pub fn isometric_elevation() -> f64 {
    (1.0 / 2f64.sqrt()).atan()
}

/// Four isometric cameras at azimuths 45°, 135°, 225°, 315°, each rotated
/// about a random axis by an angle drawn uniformly from `[0, jitter]`.
pub fn isometric_benchmark_views(
    jitter_degrees: f64,
    seed: u64,
    half_width: f64,
    resolution: usize,
) -> Vec<OrthoCamera> {
    assert!(jitter_degrees >= 0.0, "jitter must be non-negative");
    let mut rng = seeded(seed);
    let el = isometric_elevation();
    (0..4)
        .map(|i| {
            let az = FRAC_PI_4 + i as f64 * 2.0 * FRAC_PI_4;
            let base = direction(az, el.sin());
            let axis = loop {
                let a = Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let n = a.norm();
                if n > 1e-3 && n <= 1.0 {
                    break a / n;
                }
            };
            let angle = if jitter_degrees > 0.0 {
                rng.gen_range(0.0..=jitter_degrees.to_radians())
            } else {
                0.0
            };
            let rot = Rotation3::from_axis_angle(&Unit::new_unchecked(axis), angle);
            OrthoCamera::looking(rot * base, half_width, resolution, resolution)
                .expect("rotated view is a unit vector")
        })
        .collect()
}

/// Zoom in by a factor `u ~ U[0.3, 0.7]` and recentre on the projection of a
/// randomly chosen edge sample.
pub fn zoom_augment(cam: &OrthoCamera, g: &WireframeGraph, seed: u64) -> OrthoCamera {
    let mut rng = seeded(seed);
    let factor = rng.gen_range(0.3..0.7);
    let samples: Vec<&Vec3> = g.samples().collect();
    let target = samples[rng.gen_range(0..samples.len())];
    let mut out = cam.clone();
    out.half_width = cam.half_width * factor;
    out.principal = [target.dot(&cam.right()), target.dot(&cam.up())];
    out
}
