//! Mask thinning and skeleton graph extraction.

use serde::{Deserialize, Serialize};

use crate::grid::Grid;

/// 8-neighbour offsets starting east and turning counter-clockwise in image
/// terms (y grows downward): E, NE, N, NW, W, SW, S, SE.
const RING: [(isize, isize); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    /// Paths from a junction to a free end shorter than this many pixels are
    /// thinning spurs and get removed.
    pub spur_length: usize,
    /// Junctions joined by a path shorter than this are one junction.
    pub merge_length: usize,
}

impl TopologyConfig {
    /// Defaults scaled to the stroke radius in pixels.
    pub fn for_stroke_radius(radius: f64) -> Self {
        let n = (2.0 * radius).ceil() as usize + 2;
        Self {
            spur_length: n,
            merge_length: n,
        }
    }
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self::for_stroke_radius(crate::render::DEFAULT_STROKE_RADIUS)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonNode {
    pub pixels: Vec<(usize, usize)>,
    /// Mean pixel centre, in continuous pixel coordinates.
    pub center: (f64, f64),
    /// Placed on a closed loop that has no junction.
    pub synthetic: bool,
}

/// Pixel path between two nodes; `pixels` includes the node pixels at both
/// ends. A closed loop starts and ends at the same node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path2 {
    pub start: usize,
    pub end: usize,
    pub pixels: Vec<(usize, usize)>,
}

impl Path2 {
    pub fn is_loop(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonGraph {
    pub skeleton: Grid<bool>,
    pub nodes: Vec<SkeletonNode>,
    pub paths: Vec<Path2>,
}

impl SkeletonGraph {
    /// Number of path ends at `node`; a loop counts twice.
    pub fn degree(&self, node: usize) -> usize {
        self.paths
            .iter()
            .map(|p| usize::from(p.start == node) + usize::from(p.end == node))
            .sum()
    }
}

fn at(mask: &Grid<bool>, x: usize, y: usize, d: (isize, isize)) -> bool {
    let (nx, ny) = (x as isize + d.0, y as isize + d.1);
    nx >= 0 && ny >= 0 && (nx as usize) < mask.width() && (ny as usize) < mask.height() && *mask.get(nx as usize, ny as usize)
}

fn ring(mask: &Grid<bool>, x: usize, y: usize) -> [bool; 8] {
    RING.map(|d| at(mask, x, y, d))
}

fn neighbours(mask: &Grid<bool>, x: usize, y: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    RING.iter().filter(move |&&d| at(mask, x, y, d)).map(move |&(dx, dy)| {
        ((x as isize + dx) as usize, (y as isize + dy) as usize)
    })
}

fn count(mask: &Grid<bool>, x: usize, y: usize) -> usize {
    ring(mask, x, y).iter().filter(|&&b| b).count()
}

/// Yokoi 8-connectivity number: how many 8-connected foreground components
/// touch the pixel. 1 means removing it keeps the neighbourhood connected.
fn connectivity8(n: &[bool; 8]) -> usize {
    let c = |i: usize| usize::from(!n[i % 8]);
    (0..4)
        .map(|k| {
            let i = 2 * k;
            c(i) - c(i) * c(i + 1) * c(i + 2)
        })
        .sum()
}

/// Zhang–Suen thinning followed by removal of the redundant corner pixels
/// it leaves on staircases (non-end pixels whose neighbours stay connected
/// without them), giving a skeleton where path pixels have exactly two
/// neighbours.
pub fn thin(mask: &Grid<bool>) -> Grid<bool> {
    let mut img = mask.clone();
    let (w, h) = (img.width(), img.height());
    loop {
        let mut changed = false;
        for pass in 0..2 {
            let mut remove = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if !*img.get(x, y) {
                        continue;
                    }
                    // Zhang–Suen labels P2..P9 clockwise from north
                    let r = ring(&img, x, y);
                    let p = [r[2], r[1], r[0], r[7], r[6], r[5], r[4], r[3]];
                    let b = p.iter().filter(|&&v| v).count();
                    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                    let (n, e, s, wv) = (p[0], p[2], p[4], p[6]);
                    let cond = if pass == 0 {
                        !(n && e && s) && !(e && s && wv)
                    } else {
                        !(n && e && wv) && !(n && s && wv)
                    };
                    if (2..=6).contains(&b) && a == 1 && cond {
                        remove.push((x, y));
                    }
                }
            }
            changed |= !remove.is_empty();
            for (x, y) in remove {
                img.set(x, y, false);
            }
        }
        if !changed {
            break;
        }
    }
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                if *img.get(x, y) && count(&img, x, y) >= 2 && connectivity8(&ring(&img, x, y)) == 1 {
                    img.set(x, y, false);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    img
}

/// Thin `mask` and turn the skeleton into nodes and pixel paths.
pub fn extract_topology(mask: &Grid<bool>, cfg: &TopologyConfig) -> SkeletonGraph {
    let skeleton = thin(mask);
    let (w, h) = (skeleton.width(), skeleton.height());

    // node pixels: anything without exactly two neighbours; 8-adjacent node
    // pixels form one node
    let mut node_of: Grid<Option<usize>> = Grid::new(w, h, None);
    let mut nodes: Vec<SkeletonNode> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !*skeleton.get(x, y) || count(&skeleton, x, y) == 2 || node_of.get(x, y).is_some() {
                continue;
            }
            let id = nodes.len();
            let mut pixels = vec![(x, y)];
            node_of.set(x, y, Some(id));
            let mut i = 0;
            while i < pixels.len() {
                let (px, py) = pixels[i];
                for (qx, qy) in neighbours(&skeleton, px, py).collect::<Vec<_>>() {
                    if node_of.get(qx, qy).is_none() && count(&skeleton, qx, qy) != 2 {
                        node_of.set(qx, qy, Some(id));
                        pixels.push((qx, qy));
                    }
                }
                i += 1;
            }
            pixels.sort_by_key(|&(x, y)| (y, x));
            nodes.push(SkeletonNode {
                center: centroid(&pixels),
                pixels,
                synthetic: false,
            });
        }
    }

    let mut visited = Grid::new(w, h, false);
    let mut paths = Vec::new();
    for id in 0..nodes.len() {
        for &(px, py) in &nodes[id].pixels.clone() {
            for q in neighbours(&skeleton, px, py).collect::<Vec<_>>() {
                if node_of.get(q.0, q.1).is_some() || *visited.get(q.0, q.1) {
                    continue;
                }
                if let Some(path) = trace(&skeleton, &node_of, &mut visited, id, (px, py), q) {
                    paths.push(path);
                }
            }
        }
    }

    // loops with no junction: one synthetic node each
    for y in 0..h {
        for x in 0..w {
            if !*skeleton.get(x, y) || *visited.get(x, y) || node_of.get(x, y).is_some() {
                continue;
            }
            let id = nodes.len();
            nodes.push(SkeletonNode {
                pixels: vec![(x, y)],
                center: (x as f64 + 0.5, y as f64 + 0.5),
                synthetic: true,
            });
            node_of.set(x, y, Some(id));
            let first = neighbours(&skeleton, x, y).next().expect("loop pixel has neighbours");
            if let Some(path) = trace(&skeleton, &node_of, &mut visited, id, (x, y), first) {
                paths.push(path);
            }
        }
    }

    let mut graph = SkeletonGraph { skeleton, nodes, paths };
    prune(&mut graph, cfg);
    graph
}

fn centroid(pixels: &[(usize, usize)]) -> (f64, f64) {
    let n = pixels.len() as f64;
    let (sx, sy) = pixels
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x as f64 + 0.5, b + y as f64 + 0.5));
    (sx / n, sy / n)
}

/// Walk from node pixel `from` through `first` until another node pixel.
fn trace(
    skeleton: &Grid<bool>,
    node_of: &Grid<Option<usize>>,
    visited: &mut Grid<bool>,
    start: usize,
    from: (usize, usize),
    first: (usize, usize),
) -> Option<Path2> {
    let mut pixels = vec![from, first];
    visited.set(first.0, first.1, true);
    let (mut prev, mut cur) = (from, first);
    loop {
        let next = neighbours(skeleton, cur.0, cur.1).find(|&q| {
            q != prev && (node_of.get(q.0, q.1).is_some() || !*visited.get(q.0, q.1))
        });
        let Some(next) = next else {
            // ran into pixels already traced from the other side
            return None;
        };
        pixels.push(next);
        if let Some(end) = *node_of.get(next.0, next.1) {
            if end == start && pixels.len() < 4 {
                return None;
            }
            return Some(Path2 { start, end, pixels });
        }
        visited.set(next.0, next.1, true);
        prev = cur;
        cur = next;
    }
}

fn prune(g: &mut SkeletonGraph, cfg: &TopologyConfig) {
    let mut alive = vec![true; g.nodes.len()];
    loop {
        let mut changed = false;

        // spurs
        let degrees: Vec<usize> = (0..g.nodes.len()).map(|n| g.degree(n)).collect();
        if let Some(i) = g.paths.iter().position(|p| {
            !p.is_loop()
                && p.pixels.len() < cfg.spur_length
                && ((degrees[p.start] == 1 && degrees[p.end] >= 3) || (degrees[p.end] == 1 && degrees[p.start] >= 3))
        }) {
            let p = g.paths.remove(i);
            let free = if degrees[p.start] == 1 { p.start } else { p.end };
            alive[free] = false;
            changed = true;
        }

        // short links between junctions
        let degrees: Vec<usize> = (0..g.nodes.len()).map(|n| g.degree(n)).collect();
        if !changed {
            if let Some(i) = g.paths.iter().position(|p| {
                !p.is_loop() && p.pixels.len() < cfg.merge_length && degrees[p.start] >= 3 && degrees[p.end] >= 3
            }) {
                let p = g.paths.remove(i);
                let (keep, gone) = (p.start.min(p.end), p.start.max(p.end));
                let moved = std::mem::take(&mut g.nodes[gone].pixels);
                g.nodes[keep].pixels.extend(moved);
                g.nodes[keep].pixels.extend(p.pixels.iter().copied());
                g.nodes[keep].pixels.sort_by_key(|&(x, y)| (y, x));
                g.nodes[keep].pixels.dedup();
                g.nodes[keep].center = centroid(&g.nodes[keep].pixels);
                alive[gone] = false;
                for q in &mut g.paths {
                    if q.start == gone {
                        q.start = keep;
                    }
                    if q.end == gone {
                        q.end = keep;
                    }
                }
                changed = true;
            }
        }

        // pass-through nodes left behind by the above
        if !changed {
            let degrees: Vec<usize> = (0..g.nodes.len()).map(|n| g.degree(n)).collect();
            if let Some(n) =
                (0..g.nodes.len()).find(|&n| alive[n] && !g.nodes[n].synthetic && degrees[n] == 2 && !has_loop(g, n))
            {
                let ids: Vec<usize> = (0..g.paths.len())
                    .filter(|&i| g.paths[i].start == n || g.paths[i].end == n)
                    .collect();
                let (i, j) = (ids[0], ids[1]);
                let mut a = g.paths[i].clone();
                let mut b = g.paths[j].clone();
                if a.end != n {
                    a.pixels.reverse();
                    std::mem::swap(&mut a.start, &mut a.end);
                }
                if b.start != n {
                    b.pixels.reverse();
                    std::mem::swap(&mut b.start, &mut b.end);
                }
                a.pixels.extend(b.pixels.into_iter().skip(1));
                a.end = b.end;
                if a.start == a.end && a.start == n {
                    g.nodes[n].synthetic = true;
                } else {
                    alive[n] = false;
                }
                g.paths.remove(j.max(i));
                g.paths.remove(j.min(i));
                g.paths.push(a);
                changed = true;
            }
        }

        if !changed {
            break;
        }
    }
    for n in 0..g.nodes.len() {
        if alive[n] && g.degree(n) == 2 && has_loop(g, n) {
            g.nodes[n].synthetic = true;
        }
    }
    // compact ids
    let mut remap = vec![usize::MAX; g.nodes.len()];
    let mut nodes = Vec::new();
    for (n, node) in std::mem::take(&mut g.nodes).into_iter().enumerate() {
        if alive[n] {
            remap[n] = nodes.len();
            nodes.push(node);
        }
    }
    for p in &mut g.paths {
        p.start = remap[p.start];
        p.end = remap[p.end];
    }
    g.nodes = nodes;
}

fn has_loop(g: &SkeletonGraph, n: usize) -> bool {
    g.paths.iter().any(|p| p.start == n && p.end == n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_art(art: &[&str]) -> Grid<bool> {
        let h = art.len();
        let w = art[0].len();
        Grid::from_fn(w, h, |x, y| art[y].as_bytes()[x] == b'#')
    }

    #[test]
    fn yokoi_number() {
        // E and W only: two components
        let mut n = [false; 8];
        n[0] = true;
        n[4] = true;
        assert_eq!(connectivity8(&n), 2);
        // E, NE, N: one component
        let n = [true, true, true, false, false, false, false, false];
        assert_eq!(connectivity8(&n), 1);
        assert_eq!(connectivity8(&[false; 8]), 0);
    }

    #[test]
    fn thick_line_thins_to_one_pixel() {
        let mask = Grid::from_fn(30, 9, |x, y| (3..=5).contains(&y) && (2..28).contains(&x));
        let sk = thin(&mask);
        for x in 5..25 {
            let col: usize = (0..9).filter(|&y| *sk.get(x, y)).count();
            assert_eq!(col, 1, "column {x}");
        }
        let g = extract_topology(&mask, &TopologyConfig::default());
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.paths.len(), 1);
    }

    #[test]
    fn plus_sign() {
        let n = 31;
        let mask = Grid::from_fn(n, n, |x, y| {
            let c = 15usize;
            (x.abs_diff(c) <= 1 && (3..28).contains(&y)) || (y.abs_diff(c) <= 1 && (3..28).contains(&x))
        });
        let g = extract_topology(&mask, &TopologyConfig::default());
        let mut degrees: Vec<usize> = (0..g.nodes.len()).map(|i| g.degree(i)).collect();
        degrees.sort();
        assert_eq!(degrees, vec![1, 1, 1, 1, 4]);
        assert_eq!(g.paths.len(), 4);
    }

    #[test]
    fn ring_gets_synthetic_node() {
        let mask = Grid::from_fn(40, 40, |x, y| {
            let r = ((x as f64 + 0.5 - 20.0).powi(2) + (y as f64 + 0.5 - 20.0).powi(2)).sqrt();
            (12.0..=14.5).contains(&r)
        });
        let g = extract_topology(&mask, &TopologyConfig::default());
        assert_eq!(g.nodes.len(), 1);
        assert!(g.nodes[0].synthetic);
        assert_eq!(g.paths.len(), 1);
        assert!(g.paths[0].is_loop());
    }

    #[test]
    fn one_pixel_stroke() {
        let mask = from_art(&["..........", ".########.", ".........."]);
        let g = extract_topology(&mask, &TopologyConfig::default());
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.paths.len(), 1);
        assert_eq!(g.paths[0].pixels.len(), 8);
    }

    #[test]
    fn empty_mask() {
        let g = extract_topology(&Grid::new(8, 8, false), &TopologyConfig::default());
        assert!(g.nodes.is_empty() && g.paths.is_empty());
    }
}
