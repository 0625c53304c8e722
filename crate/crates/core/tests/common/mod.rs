//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::path::Path;

use wiredepth::diffusion::{ConditionTensor, NoisePredictor};
use wiredepth::wireframe::EdgeSpec;
use wiredepth::{shapes, DisparityConfig, Grid, OrthoCamera, Vec3, WireframeGraph};

/// Per-pixel renderer: every pixel against every segment of every edge.
pub struct BruteRaster {
    pub mask: Vec<bool>,
    pub depth: Vec<f64>,
    pub disparity: Vec<f64>,
    /// `(edge, depth)` per pixel in edge order.
    pub covers: Vec<Vec<(usize, f64)>>,
}

fn nearest_on_segment(px: f64, py: f64, a: (f64, f64, f64), b: (f64, f64, f64)) -> (f64, f64) {
    let dx = b.0 - a.0;
    let dy = b.1 - a.1;
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let ex = px - (a.0 + t * dx);
    let ey = py - (a.1 + t * dy);
    (ex * ex + ey * ey, a.2 + t * (b.2 - a.2))
}

pub fn brute_raster(g: &WireframeGraph, cam: &OrthoCamera, radius: f64, cfg: &DisparityConfig) -> BruteRaster {
    let (w, h) = (cam.width, cam.height);
    let projected: Vec<Vec<(f64, f64, f64)>> = g
        .edges()
        .iter()
        .map(|e| e.samples.iter().map(|p| cam.project(p)).collect())
        .collect();
    let mut out = BruteRaster {
        mask: vec![false; w * h],
        depth: vec![0.0; w * h],
        disparity: vec![0.0; w * h],
        covers: vec![Vec::new(); w * h],
    };
    for y in 0..h {
        for x in 0..w {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let i = y * w + x;
            for (e, poly) in projected.iter().enumerate() {
                let best = poly
                    .windows(2)
                    .map(|s| nearest_on_segment(px, py, s[0], s[1]))
                    .filter(|&(d2, _)| d2 <= radius * radius)
                    .min_by(|a, b| a.partial_cmp(b).unwrap());
                if let Some((_, z)) = best {
                    out.covers[i].push((e, z));
                }
            }
            if let Some(z) = out.covers[i].iter().map(|c| c.1).reduce(f64::min) {
                out.mask[i] = true;
                out.depth[i] = z;
                out.disparity[i] = (1.0 / z - 1.0 / cfg.z_far) / (1.0 / cfg.z_near - 1.0 / cfg.z_far);
            }
        }
    }
    out
}

/// `(mae, nmae, absrel, delta)` by straightforward loops.
pub fn brute_metrics(pred: &[f64], gt: &[f64], valid: &[bool]) -> (f64, f64, f64, f64) {
    let mut abs_sum = 0.0;
    let mut n = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut rel_sum = 0.0;
    let mut rel_n = 0.0;
    let mut hits = 0.0;
    for i in 0..gt.len() {
        if !valid[i] {
            continue;
        }
        abs_sum += (pred[i] - gt[i]).abs();
        n += 1.0;
        lo = lo.min(gt[i]);
        hi = hi.max(gt[i]);
        if gt[i] >= 1e-4 {
            rel_sum += (pred[i] - gt[i]).abs() / gt[i];
            rel_n += 1.0;
            if pred[i] > 0.0 && f64::max(pred[i] / gt[i], gt[i] / pred[i]) < 1.25 {
                hits += 1.0;
            }
        }
    }
    let mae = abs_sum / n;
    (mae, mae / (hi - lo + 1e-6), rel_sum / rel_n, hits / rel_n)
}

/// The exact noise predictor for data that is one of two images with equal
/// probability: the posterior mean of `x0` given `z_t` is a softmax-weighted
/// blend of the two modes.
pub struct TwoPointDenoiser {
    pub modes: [Vec<f64>; 2],
}

impl TwoPointDenoiser {
    /// Modes given as disparities in `[0, 1]`.
    pub fn new(a: &Grid<f64>, b: &Grid<f64>) -> Self {
        let z = |g: &Grid<f64>| g.as_slice().iter().map(|y| 2.0 * y - 1.0).collect();
        Self { modes: [z(a), z(b)] }
    }
}

impl NoisePredictor for TwoPointDenoiser {
    fn predict(&self, z_t: &[f64], _t: usize, ab: f64, _c: &ConditionTensor) -> Vec<f64> {
        let sa = ab.sqrt();
        let logw: Vec<f64> = self
            .modes
            .iter()
            .map(|m| {
                let d2: f64 = z_t.iter().zip(m).map(|(z, x)| (z - sa * x).powi(2)).sum();
                -d2 / (2.0 * (1.0 - ab))
            })
            .collect();
        let top = logw[0].max(logw[1]);
        let w: Vec<f64> = logw.iter().map(|l| (l - top).exp()).collect();
        let total = w[0] + w[1];
        z_t.iter()
            .enumerate()
            .map(|(i, z)| {
                let x0 = (w[0] * self.modes[0][i] + w[1] * self.modes[1][i]) / total;
                (z - sa * x0) / (1.0 - ab).sqrt()
            })
            .collect()
    }
}

/// Largest distance from a point of either set to the nearest point of the
/// other.
pub fn hausdorff(a: &[Vec3], b: &[Vec3]) -> f64 {
    let directed = |from: &[Vec3], to: &[Vec3]| {
        from.iter()
            .map(|p| to.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

pub fn unit(g: WireframeGraph) -> WireframeGraph {
    g.normalize_to_unit_sphere().unwrap()
}

/// A planar star of `arms` segments from the origin.
pub fn star(arms: usize) -> WireframeGraph {
    let mut pos = vec![Vec3::zeros()];
    let mut edges = Vec::new();
    for i in 0..arms {
        let a = std::f64::consts::TAU * i as f64 / arms as f64;
        pos.push(Vec3::new(a.cos(), a.sin(), 0.3 * (i as f64 - 1.0)));
        edges.push(EdgeSpec::line(0, i + 1));
    }
    WireframeGraph::new(pos, edges).unwrap()
}

/// Two segments crossing in the image of a camera looking along `+y`: one
/// vertical at `y = 0.2`, one horizontal at `y = -0.2`.
pub fn crossing_segments() -> WireframeGraph {
    WireframeGraph::new(
        vec![
            Vec3::new(0.0, 0.2, -0.8),
            Vec3::new(0.0, 0.2, 0.8),
            Vec3::new(-0.8, -0.2, 0.0),
            Vec3::new(0.8, -0.2, 0.0),
        ],
        vec![EdgeSpec::line(0, 1), EdgeSpec::line(2, 3)],
    )
    .unwrap()
}

/// Thirty small graphs of at most 20 edges, lines and curves, all inside the
/// unit sphere.
pub fn fixture_graphs() -> Vec<(String, WireframeGraph)> {
    let mut out = vec![
        ("cube".to_string(), unit(shapes::unit_cube())),
        ("tetrahedron".into(), unit(shapes::tetrahedron())),
        ("prism".into(), unit(shapes::triangular_prism())),
        ("l_bracket".into(), unit(shapes::l_bracket())),
        ("two_triangles".into(), unit(shapes::two_triangles())),
        ("cylinder".into(), unit(shapes::cylinder(0.5, 1.0, 24))),
        ("circle".into(), unit(shapes::circle(Vec3::zeros(), 1.0, 32))),
        ("star3".into(), unit(star(3))),
        ("star7".into(), unit(star(7))),
        ("crossing".into(), unit(crossing_segments())),
        (
            "slab".into(),
            unit(shapes::cuboid(Vec3::new(-1.0, -0.6, -0.1), Vec3::new(1.0, 0.6, 0.1))),
        ),
    ];
    for seed in 0..10 {
        out.push((format!("lines{seed}"), unit(shapes::random_lines(seed, 5 + seed as usize % 6, 4 + seed as usize))));
    }
    for seed in 0..9 {
        out.push((format!("mixed{seed}"), unit(shapes::random_mixed(100 + seed, 6, 3 + 2 * seed as usize))));
    }
    out
}

/// Write `n` fixture graphs as WireJson into `dir`, cycling the fixture set
/// with a per-copy rotation so every file differs.
pub fn write_corpus(dir: &Path, n: usize) {
    std::fs::create_dir_all(dir).unwrap();
    let fixtures = fixture_graphs();
    for i in 0..n {
        let (name, g) = &fixtures[i % fixtures.len()];
        let a = 0.37 * i as f64;
        let (s, c) = a.sin_cos();
        let g = g.transformed(|p| Vec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z)).unwrap();
        std::fs::write(dir.join(format!("s{i:03}_{name}.json")), g.to_wirejson()).unwrap();
    }
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
