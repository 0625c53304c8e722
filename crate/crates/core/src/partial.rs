//! Partial-depth simulation by breadth-first edge reveal.
//!
//! Depth is revealed edge by edge in BFS order from a random start vertex,
//! mimicking a user who has drawn a connected part of the sketch. Traversal
//! stops right after the edge whose reveal lifts coverage to the target
//! fraction; if a component runs dry first, BFS restarts from a random
//! unvisited vertex.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depth::{DepthImage, DepthSpace};
use crate::grid::Grid;
use crate::render::RenderBundle;
use crate::rng::seeded;
use crate::wireframe::{build_adjacency, WireframeGraph};

pub const TRAINING_K_MIN: f64 = 0.10;
pub const TRAINING_K_MAX: f64 = 0.90;
pub const EMPTY_CONDITION_PROBABILITY: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum PartialError {
    #[error("target fraction must lie in [0, 1], got {0}")]
    BadFraction(f64),
}

/// How coverage toward the target fraction is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMeasure {
    /// Revealed stroke pixels over all stroke pixels.
    #[default]
    Pixels,
    /// Revealed edges over all edges.
    Edges,
}

/// Partial disparity `p` and its validity mask `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialDepthPair {
    pub partial: DepthImage,
    pub mask: Grid<bool>,
    /// Revealed edges in reveal order.
    pub revealed: Vec<usize>,
    /// Revealed stroke pixels over all stroke pixels.
    pub coverage: f64,
    /// Number of BFS restarts after the first start vertex.
    pub restarts: usize,
}

impl PartialDepthPair {
    pub fn empty(bundle: &RenderBundle) -> Self {
        let (w, h) = (bundle.width(), bundle.height());
        Self {
            partial: DepthImage::invalid(w, h, bundle.disparity.config, DepthSpace::NormalizedDisparity),
            mask: Grid::new(w, h, false),
            revealed: Vec::new(),
            coverage: 0.0,
            restarts: 0,
        }
    }

    pub fn revealed_set(&self) -> BTreeSet<usize> {
        self.revealed.iter().copied().collect()
    }
}

pub fn bfs_partial_mask(
    bundle: &RenderBundle,
    g: &WireframeGraph,
    k: f64,
    seed: u64,
) -> Result<PartialDepthPair, PartialError> {
    bfs_partial_mask_with(bundle, g, k, seed, CoverageMeasure::Pixels)
}

pub fn bfs_partial_mask_with(
    bundle: &RenderBundle,
    g: &WireframeGraph,
    k: f64,
    seed: u64,
    measure: CoverageMeasure,
) -> Result<PartialDepthPair, PartialError> {
    if !(0.0..=1.0).contains(&k) {
        return Err(PartialError::BadFraction(k));
    }
    let mut out = PartialDepthPair::empty(bundle);
    let foreground = bundle.foreground();
    let edge_count = g.edges().len();
    if foreground == 0 {
        return Ok(out);
    }
    let edge_pixels = bundle.edge_pixels(edge_count);
    let adj = build_adjacency(g);
    let n_vertices = g.vertices().len();

    let mut rng = seeded(seed);
    let mut vertex_seen = vec![false; n_vertices];
    let mut edge_seen = vec![false; edge_count];
    let mut revealed_pixels = 0usize;
    let mut unvisited_vertices = n_vertices;

    let coverage = |pixels: usize, edges: usize| match measure {
        CoverageMeasure::Pixels => pixels as f64 / foreground as f64,
        CoverageMeasure::Edges => edges as f64 / edge_count as f64,
    };

    let mut first = true;
    'outer: while out.revealed.len() < edge_count && unvisited_vertices > 0 {
        if coverage(revealed_pixels, out.revealed.len()) >= k {
            break;
        }
        // uniform over vertices not yet reached
        let pick = rng.gen_range(0..unvisited_vertices);
        let start = (0..n_vertices)
            .filter(|&v| !vertex_seen[v])
            .nth(pick)
            .expect("pick is within the unvisited count");
        if !first {
            out.restarts += 1;
        }
        first = false;
        vertex_seen[start] = true;
        unvisited_vertices -= 1;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &e in adj.incident(v) {
                if edge_seen[e] {
                    continue;
                }
                edge_seen[e] = true;
                out.revealed.push(e);
                for &i in &edge_pixels[e] {
                    if !out.mask.as_slice()[i] {
                        out.mask.as_mut_slice()[i] = true;
                        out.partial.values.as_mut_slice()[i] = bundle.disparity.values.as_slice()[i];
                        out.partial.valid.as_mut_slice()[i] = true;
                        revealed_pixels += 1;
                    }
                }
                let w = g.edges()[e].other_end(v);
                if !vertex_seen[w] {
                    vertex_seen[w] = true;
                    unvisited_vertices -= 1;
                    queue.push_back(w);
                }
                if coverage(revealed_pixels, out.revealed.len()) >= k {
                    break 'outer;
                }
            }
        }
    }
    out.coverage = revealed_pixels as f64 / foreground as f64;
    Ok(out)
}

/// Training-time condition: empty with probability one half, otherwise a BFS
/// reveal with `k ~ U[0.10, 0.90]`.
pub fn sample_training_condition(bundle: &RenderBundle, g: &WireframeGraph, seed: u64) -> PartialDepthPair {
    match training_draw(seed) {
        None => PartialDepthPair::empty(bundle),
        Some((k, bfs_seed)) => bfs_partial_mask(bundle, g, k, bfs_seed).expect("k is drawn inside [0, 1]"),
    }
}

/// The random choices behind [`sample_training_condition`]: `None` for an
/// empty condition, otherwise the target fraction and the BFS seed.
pub fn training_draw(seed: u64) -> Option<(f64, u64)> {
    let mut rng = seeded(seed);
    if rng.gen_bool(EMPTY_CONDITION_PROBABILITY) {
        return None;
    }
    let k = rng.gen_range(TRAINING_K_MIN..TRAINING_K_MAX);
    Some((k, rng.gen::<u64>()))
}
