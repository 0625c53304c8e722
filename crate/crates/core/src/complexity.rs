//! Sketch difficulty scores: accidental pixel ratio and curve complexity.
//!
//! A foreground pixel is accidental when two different edges cover it at
//! distinct depth layers, i.e. one stroke passes in front of another. Hits
//! whose disparities differ by no more than `delta_occ` count as the same
//! layer, and two edges sharing a vertex are never accidental within one
//! stroke radius of that vertex's projection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::RenderBundle;
use crate::wireframe::{EdgeKind, WireframeGraph};

pub const DEFAULT_DELTA_OCC: f64 = 0.01;
pub const LINE_COST: u64 = 1;
pub const CURVE_COST: u64 = 3;

#[derive(Debug, Error, PartialEq)]
pub enum ComplexityError {
    #[error("no reports to stratify")]
    NoReports,
    #[error("bin bounds must be strictly increasing and finite")]
    UnsortedBounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprConfig {
    /// Minimum disparity gap separating two depth layers.
    pub delta_occ: f64,
    /// Exempt graph-adjacent edges near their shared vertex.
    pub exempt_corners: bool,
}

impl Default for AprConfig {
    fn default() -> Self {
        Self {
            delta_occ: DEFAULT_DELTA_OCC,
            exempt_corners: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    #[serde(default)]
    pub shape_id: String,
    #[serde(default)]
    pub view_id: String,
    pub apr: f64,
    pub curve_complexity: u64,
    pub foreground: usize,
    pub accidental: usize,
    pub lines: usize,
    pub curves: usize,
}

/// Sum of per-edge costs: 1 per line, 3 per curve.
pub fn curve_complexity(g: &WireframeGraph) -> u64 {
    g.edges()
        .iter()
        .map(|e| match e.kind {
            EdgeKind::Line => LINE_COST,
            EdgeKind::Curve => CURVE_COST,
        })
        .sum()
}

/// Per-pixel accidental flags.
pub fn accidental_pixels(bundle: &RenderBundle, g: &WireframeGraph, cfg: &AprConfig) -> Vec<bool> {
    let dcfg = bundle.disparity.config;
    let cam = &bundle.camera;
    let w = bundle.width();
    let r2 = bundle.stroke_radius * bundle.stroke_radius;
    let vertex_px: Vec<(f64, f64)> = g
        .vertices()
        .iter()
        .map(|v| {
            let (x, y, _) = cam.project(&v.position);
            (x, y)
        })
        .collect();
    let near_shared_vertex = |a: usize, b: usize, px: f64, py: f64| {
        let ea = &g.edges()[a];
        let eb = &g.edges()[b];
        ea.endpoints.iter().any(|va| {
            eb.endpoints.contains(va) && {
                let (vx, vy) = vertex_px[*va];
                (px - vx).powi(2) + (py - vy).powi(2) <= r2
            }
        })
    };
    bundle
        .covers
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, hits)| {
            if hits.len() < 2 {
                return false;
            }
            let px = (i % w) as f64 + 0.5;
            let py = (i / w) as f64 + 0.5;
            hits.iter().enumerate().any(|(j, a)| {
                hits[j + 1..].iter().any(|b| {
                    a.edge != b.edge
                        && (dcfg.disparity(a.depth) - dcfg.disparity(b.depth)).abs() > cfg.delta_occ
                        && !(cfg.exempt_corners && near_shared_vertex(a.edge, b.edge, px, py))
                })
            })
        })
        .collect()
}

/// Accidental pixels over foreground pixels; 0 for an empty sketch.
pub fn accidental_pixel_ratio(bundle: &RenderBundle, g: &WireframeGraph, cfg: &AprConfig) -> f64 {
    let fg = bundle.foreground();
    if fg == 0 {
        log::warn!("accidental pixel ratio of an empty sketch is defined as 0");
        return 0.0;
    }
    let acc = accidental_pixels(bundle, g, cfg).iter().filter(|&&a| a).count();
    acc as f64 / fg as f64
}

pub fn score(bundle: &RenderBundle, g: &WireframeGraph, cfg: &AprConfig) -> ComplexityReport {
    let foreground = bundle.foreground();
    let accidental = accidental_pixels(bundle, g, cfg).iter().filter(|&&a| a).count();
    ComplexityReport {
        shape_id: bundle.provenance.shape_id.clone(),
        view_id: bundle.provenance.view_id.clone(),
        apr: if foreground == 0 {
            0.0
        } else {
            accidental as f64 / foreground as f64
        },
        curve_complexity: curve_complexity(g),
        foreground,
        accidental,
        lines: g.line_count(),
        curves: g.curve_count(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratifyKey {
    Complexity,
    Apr,
}

impl StratifyKey {
    pub fn value(self, r: &ComplexityReport) -> f64 {
        match self {
            StratifyKey::Complexity => r.curve_complexity as f64,
            StratifyKey::Apr => r.apr,
        }
    }
}

/// One histogram bin `[lower, upper)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_apr: f64,
    pub mean_complexity: f64,
}

/// Bin index for `value` given inner `bounds`: `bounds.len() + 1` bins,
/// `(-∞, b0), [b0, b1), …, [b_last, ∞)`.
pub fn bin_index(bounds: &[f64], value: f64) -> usize {
    bounds.partition_point(|&b| b <= value)
}

pub fn check_bounds(bounds: &[f64]) -> Result<(), ComplexityError> {
    if bounds.iter().any(|b| !b.is_finite()) || bounds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ComplexityError::UnsortedBounds);
    }
    Ok(())
}

/// Bin reports by `key` using closed-open bins around the inner `bounds`.
pub fn stratify(
    reports: &[ComplexityReport],
    bounds: &[f64],
    key: StratifyKey,
) -> Result<Vec<BinSummary>, ComplexityError> {
    if reports.is_empty() {
        return Err(ComplexityError::NoReports);
    }
    check_bounds(bounds)?;
    let n_bins = bounds.len() + 1;
    let mut sums = vec![(0usize, 0.0f64, 0.0f64); n_bins];
    for r in reports {
        let s = &mut sums[bin_index(bounds, key.value(r))];
        s.0 += 1;
        s.1 += r.apr;
        s.2 += r.curve_complexity as f64;
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(i, (count, apr, cx))| {
            let n = count.max(1) as f64;
            BinSummary {
                lower: if i == 0 { f64::NEG_INFINITY } else { bounds[i - 1] },
                upper: bounds.get(i).copied().unwrap_or(f64::INFINITY),
                count,
                mean_apr: if count == 0 { 0.0 } else { apr / n },
                mean_complexity: if count == 0 { 0.0 } else { cx / n },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use crate::Vec3;

    fn report(apr: f64, cx: u64) -> ComplexityReport {
        ComplexityReport {
            shape_id: String::new(),
            view_id: String::new(),
            apr,
            curve_complexity: cx,
            foreground: 100,
            accidental: (apr * 100.0) as usize,
            lines: cx as usize,
            curves: 0,
        }
    }

    #[test]
    fn complexity_tallies() {
        assert_eq!(curve_complexity(&shapes::unit_cube()), 12);
        assert_eq!(curve_complexity(&shapes::cylinder(0.5, 1.0, 32)), 8);
        assert_eq!(curve_complexity(&shapes::circle(Vec3::zeros(), 1.0, 16)), 3);
    }

    #[test]
    fn stratify_three_bins() {
        let reports = [report(0.1, 8), report(0.2, 12), report(0.3, 30)];
        let bins = stratify(&reports, &[10.0, 25.0], StratifyKey::Complexity).unwrap();
        assert_eq!(bins.iter().map(|b| b.count).collect::<Vec<_>>(), vec![1, 1, 1]);
        assert_eq!(bins[2].mean_complexity, 30.0);
        // closed-open on the lower bound
        let edge = stratify(&[report(0.0, 10)], &[10.0, 25.0], StratifyKey::Complexity).unwrap();
        assert_eq!(edge[1].count, 1);
    }

    #[test]
    fn stratify_single_bin() {
        let bins = stratify(&[report(0.25, 7)], &[], StratifyKey::Apr).unwrap();
        assert_eq!(bins.len(), 1);
        assert_eq!(bins[0].count, 1);
        assert_eq!(bins[0].mean_apr, 0.25);
        assert_eq!(bins[0].mean_complexity, 7.0);
    }

    #[test]
    fn stratify_errors() {
        assert_eq!(stratify(&[], &[1.0], StratifyKey::Apr), Err(ComplexityError::NoReports));
        assert_eq!(
            stratify(&[report(0.1, 1)], &[2.0, 1.0], StratifyKey::Apr),
            Err(ComplexityError::UnsortedBounds)
        );
    }
}
