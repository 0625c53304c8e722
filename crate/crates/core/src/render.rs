//! Z-buffered stroke rasterization of wireframes.
//!
//! Each edge polyline is projected orthographically and drawn with a round pen
//! of fixed pixel radius: a pixel is covered by an edge when its centre lies
//! within the radius of the projected polyline. The covering depth is taken
//! from the polyline point nearest to the pixel centre (ties resolved toward
//! the smaller depth), and the pixel keeps the minimum over all covering
//! edges. Every `(edge, depth)` hit is kept in a per-pixel cover list.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraError, OrthoCamera};
use crate::depth::{DepthError, DepthImage, DepthSpace, DisparityConfig};
use crate::grid::Grid;
use crate::wireframe::WireframeGraph;

pub const DEFAULT_STROKE_RADIUS: f64 = 1.5;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("stroke radius must be at least 0.5 px, got {0}")]
    BadRadius(f64),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error("no geometry falls inside the camera window")]
    Empty,
    #[error("depth out of the disparity band: {0}")]
    DepthRange(#[from] DepthError),
}

/// One edge covering a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub edge: usize,
    pub depth: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub shape_id: String,
    pub view_id: String,
    pub seed: u64,
}

/// Aligned sketch mask, depth, disparity and cover lists for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderBundle {
    pub mask: Grid<bool>,
    pub depth: DepthImage,
    pub disparity: DepthImage,
    pub covers: Grid<Vec<Hit>>,
    pub camera: OrthoCamera,
    pub stroke_radius: f64,
    pub provenance: Provenance,
}

impl RenderBundle {
    pub fn width(&self) -> usize {
        self.mask.width()
    }

    pub fn height(&self) -> usize {
        self.mask.height()
    }

    pub fn foreground(&self) -> usize {
        self.mask.count()
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Per-edge covered pixel indices (row-major), indexed by edge id.
    pub fn edge_pixels(&self, edge_count: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); edge_count];
        for (i, hits) in self.covers.as_slice().iter().enumerate() {
            for h in hits {
                out[h.edge].push(i);
            }
        }
        out
    }
}

/// Squared pixel distance from `(px, py)` to segment `a→b` and the depth at
/// the nearest point on the segment.
#[inline]
pub fn segment_hit(px: f64, py: f64, a: (f64, f64, f64), b: (f64, f64, f64)) -> (f64, f64) {
    let dx = b.0 - a.0;
    let dy = b.1 - a.1;
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let cx = a.0 + t * dx;
    let cy = a.1 + t * dy;
    let ex = px - cx;
    let ey = py - cy;
    (ex * ex + ey * ey, a.2 + t * (b.2 - a.2))
}

#[inline]
fn closer(candidate: (f64, f64), current: (f64, f64)) -> bool {
    candidate.0 < current.0 || (candidate.0 == current.0 && candidate.1 < current.1)
}

/// Rasterize every edge of `g` through `cam`.
pub fn rasterize(
    g: &WireframeGraph,
    cam: &OrthoCamera,
    stroke_radius: f64,
    cfg: &DisparityConfig,
) -> Result<RenderBundle, RenderError> {
    if !(stroke_radius >= 0.5) {
        return Err(RenderError::BadRadius(stroke_radius));
    }
    cam.validate()?;
    cfg.validate()?;
    let (w, h) = (cam.width, cam.height);
    let r2 = stroke_radius * stroke_radius;
    let mut covers: Grid<Vec<Hit>> = Grid::from_fn(w, h, |_, _| Vec::new());
    // squared distance of the last hit in each cover list
    let mut last_d2 = vec![f64::INFINITY; w * h];

    for edge in g.edges() {
        let projected: Vec<(f64, f64, f64)> = edge.samples.iter().map(|p| cam.project(p)).collect();
        for seg in projected.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let x0 = (a.0.min(b.0) - stroke_radius - 0.5).floor().max(0.0);
            let x1 = (a.0.max(b.0) + stroke_radius).ceil().min(w as f64 - 1.0);
            let y0 = (a.1.min(b.1) - stroke_radius - 0.5).floor().max(0.0);
            let y1 = (a.1.max(b.1) + stroke_radius).ceil().min(h as f64 - 1.0);
            if !(x0 <= x1 && y0 <= y1) {
                continue;
            }
            for py in y0 as usize..=y1 as usize {
                for px in x0 as usize..=x1 as usize {
                    let hit = segment_hit(px as f64 + 0.5, py as f64 + 0.5, a, b);
                    if hit.0 > r2 {
                        continue;
                    }
                    let i = py * w + px;
                    let list = &mut covers.as_mut_slice()[i];
                    match list.last_mut() {
                        Some(last) if last.edge == edge.id => {
                            if closer(hit, (last_d2[i], last.depth)) {
                                last.depth = hit.1;
                                last_d2[i] = hit.0;
                            }
                        }
                        _ => {
                            list.push(Hit {
                                edge: edge.id,
                                depth: hit.1,
                            });
                            last_d2[i] = hit.0;
                        }
                    }
                }
            }
        }
    }

    let mask = covers.map(|hits| !hits.is_empty());
    if mask.count() == 0 {
        return Err(RenderError::Empty);
    }
    let mut depth = DepthImage::invalid(w, h, *cfg, DepthSpace::MetricDepth);
    for (i, hits) in covers.as_slice().iter().enumerate() {
        if let Some(z) = hits.iter().map(|h| h.depth).reduce(f64::min) {
            depth.values.as_mut_slice()[i] = z;
            depth.valid.as_mut_slice()[i] = true;
        }
    }
    let disparity = crate::depth::depth_to_disparity(&depth, cfg)?;
    Ok(RenderBundle {
        mask,
        depth,
        disparity,
        covers,
        camera: cam.clone(),
        stroke_radius,
        provenance: Provenance::default(),
    })
}
