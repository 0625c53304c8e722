//! Polyline fitting over skeleton paths.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::skeleton::SkeletonGraph;
use super::{PointCloud, ReconstructError};
use crate::camera::OrthoCamera;
use crate::wireframe::{EdgeSpec, WireframeGraph};
use crate::Vec3;

/// Cap on the depth-per-image-length slope used to widen the end
/// clustering tolerance for lines running steeply into the image.
const MAX_SLOPE: f64 = 4.0;

/// Pieces closer to parallel than 5° may be one line.
const COINCIDENT_COS: f64 = 0.996_194_698_091_745_5;

/// Fitting thresholds. Tolerances on distances are in pixel footprints,
/// lengths along the image in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Stroke radius of the drawing, in pixels. Free ends are placed this
    /// far inside the end of their stroke.
    pub stroke_radius: f64,
    /// Maximum point-to-line distance before a path is split.
    pub split_tolerance: f64,
    /// Skeleton pixels this close to a junction are not used for fitting:
    /// their depth may belong to another stroke.
    pub junction_clearance: f64,
    /// Path ends meeting at one junction within this 3D distance are the
    /// same vertex; widened by `1 + slope` for lines steep in depth.
    pub cluster_tolerance: f64,
    /// Pieces shorter than this many pixels in the image are dropped, as
    /// are leaf paths this short off a junction. Where strokes meet at an
    /// acute angle the skeleton runs along the bisector for a while and
    /// mixes their depths; the vertex is recovered from the longer pieces.
    pub short_piece_length: f64,
    /// Ends at one junction whose lines meet within this many pixels of
    /// both ends are the same vertex too. Strokes meeting at an acute angle
    /// merge for a while before the skeleton separates them.
    pub junction_reach: f64,
    /// Pixels at each end of a candidate piece ignored by the split test,
    /// where a corner bends the skeleton.
    pub corner_trim: f64,
}

impl FitConfig {
    pub fn for_stroke_radius(stroke_radius: f64) -> Self {
        Self {
            stroke_radius,
            ..Self::default()
        }
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            stroke_radius: crate::render::DEFAULT_STROKE_RADIUS,
            split_tolerance: 1.5,
            junction_clearance: 3.0,
            cluster_tolerance: 4.0,
            short_piece_length: 16.0,
            junction_reach: 24.0,
            corner_trim: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedWireframe {
    pub graph: WireframeGraph,
    /// RMS distance from each edge's supporting points to the edge segment.
    pub residuals: Vec<f64>,
    /// Cloud point indices supporting each edge.
    pub support: Vec<Vec<usize>>,
}

/// Total-least-squares line: centroid and unit principal direction.
pub fn tls_line(points: &[Vec3]) -> (Vec3, Vec3) {
    let n = points.len() as f64;
    let c = points.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let i = eig.eigenvalues.imax();
    let mut dir: Vec3 = eig.eigenvectors.column(i).into_owned();
    if dir.norm() == 0.0 || !dir.norm().is_finite() {
        dir = Vec3::x();
    }
    (c, dir.normalize())
}

fn line_distance(p: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    let v = p - c;
    (v - d * v.dot(d)).norm()
}

pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Smallest eigenvalue of `Σ (I - d dᵀ)` accepted for a line intersection,
/// relative to the line count; two lines 10° apart sit right at it.
const MIN_SPREAD: f64 = 0.0076;

/// Point with the least summed squared distance to the lines `c + s·d`,
/// or `None` when they are too close to parallel to pin one down.
fn nearest_point(lines: &[(Vec3, Vec3)]) -> Option<Vec3> {
    let mut a = Matrix3::zeros();
    let mut b = Vec3::zeros();
    for (c, d) in lines {
        let p = Matrix3::identity() - d * d.transpose();
        a += p;
        b += p * c;
    }
    let eig = SymmetricEigen::new(a);
    if eig.eigenvalues.min() < MIN_SPREAD * lines.len() as f64 {
        return None;
    }
    a.try_inverse().map(|inv| inv * b)
}

/// Closest points of the lines `c1 + s·d1` and `c2 + t·d2`, unless they are
/// near parallel.
fn closest_points(c1: &Vec3, d1: &Vec3, c2: &Vec3, d2: &Vec3) -> Option<(Vec3, Vec3)> {
    let b = d1.dot(d2);
    let den = 1.0 - b * b;
    if den < 1e-6 {
        return None;
    }
    let w = c1 - c2;
    let (d, e) = (d1.dot(&w), d2.dot(&w));
    let s = (b * e - d) / den;
    let t = (e - b * d) / den;
    Some((c1 + d1 * s, c2 + d2 * t))
}

fn image_length(cam: &OrthoCamera, a: &Vec3, b: &Vec3) -> f64 {
    let (x0, y0, _) = cam.project(a);
    let (x1, y1, _) = cam.project(b);
    (x1 - x0).hypot(y1 - y0)
}

/// Drop pieces shorter than `min_length` in the image, except the first or
/// last when asked to keep them, and keep the longest when none is left.
fn drop_short_pieces(
    pts: &[Vec3],
    ranges: Vec<(usize, usize)>,
    min_length: f64,
    cam: &OrthoCamera,
    keep_ends: (bool, bool),
) -> Vec<(usize, usize)> {
    let len = |r: &(usize, usize)| image_length(cam, &pts[r.0], &pts[r.1]);
    let last = ranges.len() - 1;
    let kept: Vec<(usize, usize)> = ranges
        .iter()
        .enumerate()
        .filter(|&(i, r)| len(r) >= min_length || (i == 0 && keep_ends.0) || (i == last && keep_ends.1))
        .map(|(_, r)| *r)
        .collect();
    if kept.is_empty() {
        ranges.into_iter().max_by(|a, b| len(a).total_cmp(&len(b))).into_iter().collect()
    } else {
        kept
    }
}

/// One fitted piece of a path.
#[derive(Debug, Clone)]
struct Piece {
    center: Vec3,
    dir: Vec3,
    a: Vec3,
    b: Vec3,
    /// Cloud indices.
    support: Vec<usize>,
}

/// Thresholds for [`split_path`].
#[derive(Clone, Copy)]
struct SplitTest<'a> {
    tol: f64,
    /// Points this many pixels from either end are not tested: a corner
    /// bends the skeleton there.
    trim: f64,
    cam: &'a OrthoCamera,
}

impl SplitTest<'_> {
    /// Points away from the ends, or all of them if fewer than three are.
    fn inner(&self, pts: &[Vec3]) -> Vec<Vec3> {
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        let inner: Vec<Vec3> = pts
            .iter()
            .filter(|p| image_length(self.cam, p, &first) >= self.trim && image_length(self.cam, p, &last) >= self.trim)
            .copied()
            .collect();
        if inner.len() >= 3 {
            inner
        } else {
            pts.to_vec()
        }
    }

    fn fits(&self, pts: &[Vec3]) -> bool {
        let pts = self.inner(pts);
        let (c, d) = tls_line(&pts);
        pts.iter().all(|p| line_distance(p, &c, &d) <= self.tol)
    }
}

/// Split a path into pieces that each fit a line, then rejoin neighbours
/// that fit one together: the recursion can cut a straight run in two.
fn split_path(pts: &[Vec3], test: SplitTest) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    split(pts, 0, pts.len() - 1, test, &mut ranges);
    let mut i = 0;
    while i + 1 < ranges.len() {
        if test.fits(&pts[ranges[i].0..=ranges[i + 1].1]) {
            ranges[i].1 = ranges[i + 1].1;
            ranges.remove(i + 1);
            i = i.saturating_sub(1);
        } else {
            i += 1;
        }
    }
    ranges
}

/// Recursively split `pts[s..=e]` while its TLS line misses some point by
/// more than the tolerance. The cut goes at the point farthest from the chord
/// `pts[s]→pts[e]`, which lands on corners rather than next to an end.
fn split(pts: &[Vec3], s: usize, e: usize, test: SplitTest, out: &mut Vec<(usize, usize)>) {
    if test.fits(&pts[s..=e]) || e - s < 2 {
        out.push((s, e));
        return;
    }
    let k = (s + 1..e)
        .max_by(|&i, &j| {
            point_segment_distance(&pts[i], &pts[s], &pts[e]).total_cmp(&point_segment_distance(&pts[j], &pts[s], &pts[e]))
        })
        .expect("range has an interior point");
    split(pts, s, k, test, out);
    split(pts, k, e, test, out);
}

/// Fit `pts[s..=e]`: the line through the points the split test checked,
/// the extent over all of them.
fn piece(pts: &[Vec3], ids: &[usize], s: usize, e: usize, test: SplitTest) -> Piece {
    let (center, dir) = tls_line(&test.inner(&pts[s..=e]));
    let ts: Vec<f64> = pts[s..=e].iter().map(|p| (p - center).dot(&dir)).collect();
    let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // orient along the path
    let (ta, tb) = if ts[ts.len() - 1] >= ts[0] { (lo, hi) } else { (hi, lo) };
    Piece {
        center,
        dir,
        a: center + dir * ta,
        b: center + dir * tb,
        support: ids[s..=e].to_vec(),
    }
}

/// Point on the line `c + s·d` whose projection is closest to pixel `(x, y)`.
fn snap_to_pixel(cam: &OrthoCamera, c: &Vec3, d: &Vec3, target: (f64, f64)) -> Option<Vec3> {
    let (x0, y0, _) = cam.project(c);
    let (x1, y1, _) = cam.project(&(c + d));
    let (dx, dy) = (x1 - x0, y1 - y0);
    let len2 = dx * dx + dy * dy;
    if len2 < 1e-6 {
        return None;
    }
    let s = ((target.0 - x0) * dx + (target.1 - y0) * dy) / len2;
    Some(c + d * s)
}

#[derive(Debug, Clone, Copy)]
struct End {
    node: usize,
    piece: usize,
    at_start: bool,
}

/// Fit a line wireframe to the cloud points under each skeleton path.
pub fn fit_wireframe(
    topo: &SkeletonGraph,
    cloud: &PointCloud,
    cam: &OrthoCamera,
    cfg: &FitConfig,
) -> Result<FittedWireframe, ReconstructError> {
    let fp = cam.footprint();
    let index = cloud.index_grid();
    let degree: Vec<usize> = (0..topo.nodes.len()).map(|n| topo.degree(n)).collect();
    let clearance2 = (cfg.junction_clearance).powi(2);

    let mut pieces: Vec<Piece> = Vec::new();
    let mut ends: Vec<End> = Vec::new();
    // consecutive pieces of one path: (left piece, right piece)
    let mut breaks: Vec<(usize, usize)> = Vec::new();

    // short paths between junctions, with the pieces fitted to them
    let mut short_links: Vec<(usize, usize, std::ops::Range<usize>)> = Vec::new();
    // open paths fitted with several pieces
    let mut multi: Vec<(usize, usize, std::ops::Range<usize>)> = Vec::new();
    for path in &topo.paths {
        let (lo, hi) = (degree[path.start].min(degree[path.end]), degree[path.start].max(degree[path.end]));
        let short = (path.pixels.len() as f64) < cfg.short_piece_length;
        // a short loop is a hole left where strokes meet, a short spur the
        // tip of an acute corner
        if short && (path.is_loop() || (lo == 1 && hi >= 3)) {
            continue;
        }
        let first_piece = pieces.len();
        let mut link = |pieces: &Vec<Piece>| {
            if short && lo >= 3 {
                short_links.push((path.start, path.end, first_piece..pieces.len()));
            }
        };
        let near_junction = |x: usize, y: usize| {
            [path.start, path.end].iter().any(|&n| {
                degree[n] >= 3 && {
                    let (cx, cy) = topo.nodes[n].center;
                    (x as f64 + 0.5 - cx).powi(2) + (y as f64 + 0.5 - cy).powi(2) <= clearance2
                }
            })
        };
        let ids: Vec<usize> = path
            .pixels
            .iter()
            .filter(|&&(x, y)| !near_junction(x, y))
            .filter_map(|&(x, y)| *index.get(x, y))
            .collect();
        // a closed loop repeats its node pixel at both ends
        let ids: Vec<usize> = if path.is_loop() && ids.len() > 1 && ids.first() == ids.last() {
            ids[..ids.len() - 1].to_vec()
        } else {
            ids
        };
        if ids.len() < 2 {
            link(&pieces);
            log::warn!(
                "dropping path {}-{} with {} supporting points",
                path.start,
                path.end,
                ids.len()
            );
            continue;
        }
        let pts: Vec<Vec3> = ids.iter().map(|&i| cloud.points[i]).collect();
        let test = SplitTest {
            tol: cfg.split_tolerance * fp,
            trim: cfg.corner_trim,
            cam,
        };
        if path.is_loop() {
            // close the loop through its first point so both ends meet,
            // starting over from a corner if that point is mid-line
            let closed_from = |start: usize| {
                let order: Vec<usize> = (0..=ids.len()).map(|i| (start + i) % ids.len()).collect();
                let pts: Vec<Vec3> = order.iter().map(|&i| pts[i]).collect();
                let ids: Vec<usize> = order.iter().map(|&i| ids[i]).collect();
                (pts, ids)
            };
            let (mut closed, mut closed_ids) = closed_from(0);
            let mut ranges = drop_short_pieces(&closed, split_path(&closed, test), cfg.short_piece_length, cam, (false, false));
            if ranges.len() > 1 {
                let (s, _) = ranges[ranges.len() - 1];
                let wrap: Vec<Vec3> = closed[s..].iter().chain(&closed[1..=ranges[0].1]).copied().collect();
                if test.fits(&wrap) {
                    (closed, closed_ids) = closed_from(s);
                    ranges = drop_short_pieces(&closed, split_path(&closed, test), cfg.short_piece_length, cam, (false, false));
                }
            }
            push_path(ranges.iter().map(|&(s, e)| piece(&closed, &closed_ids, s, e, test)), path.start, path.end, &mut pieces, &mut ends, &mut breaks);
            link(&pieces);
        } else {
            let ranges = split_path(&pts, test);
            // short pieces at junctions are judged once all lines are known
            let keep = (degree[path.start] >= 3, degree[path.end] >= 3);
            let ranges = drop_short_pieces(&pts, ranges, cfg.short_piece_length, cam, keep);
            push_path(ranges.iter().map(|&(s, e)| piece(&pts, &ids, s, e, test)), path.start, path.end, &mut pieces, &mut ends, &mut breaks);
            link(&pieces);
            if pieces.len() - first_piece > 1 {
                multi.push((path.start, path.end, first_piece..pieces.len()));
            }
        }
    }
    if pieces.is_empty() {
        return Err(ReconstructError::NothingFitted);
    }

    let view = cam.view();
    // depth change per unit of image-plane travel, capped
    let slope = |d: &Vec3| {
        let along = d.dot(&view).abs();
        let across = (d - view * d.dot(&view)).norm();
        (along / across.max(1e-9)).min(MAX_SLOPE)
    };
    let coincide = |p: &Piece, q: &Piece| {
        p.dir.dot(&q.dir).abs() >= COINCIDENT_COS
            && line_distance(&q.center, &p.center, &p.dir)
                <= cfg.cluster_tolerance * fp * (1.0 + slope(&p.dir).max(slope(&q.dir)))
    };
    let mut dead = vec![false; pieces.len()];
    // a short piece ending a path at a junction is where the skeleton
    // follows another stroke into it, if it lies on that stroke's line
    // 3D distance from `p` to the line of piece `q`, in tolerances
    let off_line = |p: &Vec3, q: &Piece| line_distance(p, &q.center, &q.dir) / (cfg.cluster_tolerance * fp * (1.0 + slope(&q.dir)));
    let on_other_line = |i: usize, node: usize, own: &std::ops::Range<usize>, dead: &[bool], ends: &[End]| {
        ends.iter()
            .filter(|e| e.node == node && !own.contains(&e.piece) && !dead[e.piece])
            .any(|e| off_line(&pieces[i].center, &pieces[e.piece]) <= 1.0)
    };
    for (start, end, own) in &multi {
        for (node, i, next, at_start) in [(*start, own.start, own.start + 1, true), (*end, own.end - 1, own.end - 2, false)] {
            let alive = own.clone().filter(|&k| !dead[k]).count();
            let len = image_length(cam, &pieces[i].a, &pieces[i].b);
            let tip = if at_start { pieces[i].a } else { pieces[i].b };
            // or it is the path's own stroke bending in
            let stub = (len < cfg.short_piece_length && on_other_line(i, node, own, &dead, &ends))
                || (len < 2.0 * cfg.short_piece_length && off_line(&tip, &pieces[next]) <= 1.0);
            if alive < 2 || degree[node] < 3 || !stub {
                continue;
            }
            dead[i] = true;
            for e in ends.iter_mut().filter(|e| e.piece == i && e.at_start == at_start) {
                e.piece = next;
            }
            breaks.retain(|&b| b != (i, next) && b != (next, i));
        }
    }

    // a short link is a sliver of one junction, such as a shallow crossing
    // thinned into two forks, when a line runs straight through it or
    // nothing could be fitted to it
    let mut connectors: Vec<(usize, usize)> = Vec::new();
    for (a, b, own) in &short_links {
        let at = |n: usize| ends.iter().filter(move |e| e.node == n && !own.contains(&e.piece));
        let through = at(*a).any(|i| at(*b).any(|j| i.piece != j.piece && coincide(&pieces[i.piece], &pieces[j.piece])));
        if through || own.is_empty() {
            connectors.push((*a, *b));
            for i in own.clone() {
                dead[i] = true;
            }
        }
    }
    ends.retain(|e| !dead[e.piece]);
    breaks.retain(|&(l, r)| !dead[l] && !dead[r]);

    let mut junction = vec![0; topo.nodes.len()];
    let groups = single_linkage(topo.nodes.len(), |a, b| {
        connectors.contains(&(a, b)) || connectors.contains(&(b, a))
    });
    let mut junction_center = Vec::with_capacity(groups.len());
    for (j, nodes) in groups.iter().enumerate() {
        let (sx, sy) = nodes.iter().fold((0.0, 0.0), |(sx, sy), &n| {
            (sx + topo.nodes[n].center.0, sy + topo.nodes[n].center.1)
        });
        junction_center.push((sx / nodes.len() as f64, sy / nodes.len() as f64));
        for &n in nodes {
            junction[n] = j;
        }
    }

    // snap path ends at junctions onto the junction's pixel position
    for e in &ends {
        if degree[e.node] < 3 {
            continue;
        }
        let p = &pieces[e.piece];
        if let Some(q) = snap_to_pixel(cam, &p.center, &p.dir, junction_center[junction[e.node]]) {
            let p = &mut pieces[e.piece];
            if e.at_start {
                p.a = q;
            } else {
                p.b = q;
            }
        }
    }

    // thinning wears down stroke tips: run free ends out to the mask edge
    for e in &ends {
        if degree[e.node] != 1 {
            continue;
        }
        let p = &pieces[e.piece];
        let (tip, from) = if e.at_start { (p.a, p.b) } else { (p.b, p.a) };
        let out = if (tip - from).dot(&p.dir) >= 0.0 { p.dir } else { -p.dir };
        let (x0, y0, _) = cam.project(&tip);
        let (x1, y1, _) = cam.project(&(tip + out));
        let per_unit = (x1 - x0).hypot(y1 - y0);
        if per_unit < 1e-6 {
            continue;
        }
        let (ux, uy) = ((x1 - x0) / per_unit, (y1 - y0) / per_unit);
        let depth_tol = cfg.cluster_tolerance * fp * (1.0 + slope(&p.dir));
        // on the mask and at the depth the line predicts, so the run stops
        // at another stroke
        let inside = |t: f64| {
            let (x, y) = (x0 + t * ux, y0 + t * uy);
            if x < 0.0 || y < 0.0 || x as usize >= cloud.width || y as usize >= cloud.height {
                return false;
            }
            index.get(x as usize, y as usize).is_some_and(|i| {
                let want = cam.project(&(tip + out * (t / per_unit))).2;
                (cam.project(&cloud.points[i]).2 - want).abs() <= depth_tol
            })
        };
        let step = 0.25;
        let mut t = 0.0;
        while t < 2.0 * cfg.short_piece_length && inside(t + step) {
            t += step;
        }
        let run = t - cfg.stroke_radius;
        if run > 0.0 {
            let q = tip + out * (run / per_unit);
            let p = &mut pieces[e.piece];
            if e.at_start {
                p.a = q;
            } else {
                p.b = q;
            }
        }
    }

    // vertices: clusters of ends per node, then polyline breaks
    let end_pos = |pieces: &[Piece], e: &End| if e.at_start { pieces[e.piece].a } else { pieces[e.piece].b };
    let mut positions: Vec<Vec3> = Vec::new();
    let mut mergeable: Vec<bool> = Vec::new();
    // (piece, at_start) -> vertex
    let mut vertex_of: BTreeMap<(usize, bool), usize> = BTreeMap::new();
    let mut by_junction: BTreeMap<usize, Vec<End>> = BTreeMap::new();
    for e in &ends {
        by_junction.entry(junction[e.node]).or_default().push(*e);
    }
    for group in by_junction.values() {
        let pos: Vec<Vec3> = group.iter().map(|e| end_pos(&pieces, e)).collect();
        let slopes: Vec<f64> = group.iter().map(|e| slope(&pieces[e.piece].dir)).collect();
        let close = |i: usize, j: usize| {
            let tol = cfg.cluster_tolerance * fp * (1.0 + slopes[i].max(slopes[j]));
            if (pos[i] - pos[j]).norm() <= tol {
                return true;
            }
            let (pi, pj) = (&pieces[group[i].piece], &pieces[group[j].piece]);
            closest_points(&pi.center, &pi.dir, &pj.center, &pj.dir).is_some_and(|(a, b)| {
                (a - b).norm() <= tol
                    && image_length(cam, &a, &pos[i]) <= cfg.junction_reach
                    && image_length(cam, &b, &pos[j]) <= cfg.junction_reach
            })
        };
        for cluster in single_linkage(pos.len(), close) {
            let v = positions.len();
            let mean = cluster.iter().fold(Vec3::zeros(), |a, &i| a + pos[i]) / cluster.len() as f64;
            let reach = (cfg.cluster_tolerance + cfg.junction_reach)
                * fp
                * (1.0 + cluster.iter().map(|&i| slopes[i]).fold(0.0, f64::max));
            positions.push(meeting_point(&pieces, cluster.iter().map(|&i| group[i].piece), mean, reach));
            mergeable.push(degree[group[0].node] >= 3 && cluster.len() == 2);
            for &i in &cluster {
                vertex_of.insert((group[i].piece, group[i].at_start), v);
            }
        }
    }
    for &(l, r) in &breaks {
        let v = positions.len();
        let mean = (pieces[l].b + pieces[r].a) / 2.0;
        let reach = (cfg.cluster_tolerance + cfg.junction_reach)
            * fp
            * (1.0 + slope(&pieces[l].dir).max(slope(&pieces[r].dir)));
        positions.push(meeting_point(&pieces, [l, r].into_iter(), mean, reach));
        mergeable.push(false);
        vertex_of.insert((l, false), v);
        vertex_of.insert((r, true), v);
    }

    let mut edges: Vec<(usize, usize, Vec<usize>)> = pieces
        .iter()
        .enumerate()
        .filter(|&(i, _)| !dead[i])
        .map(|(i, p)| (vertex_of[&(i, true)], vertex_of[&(i, false)], p.support.clone()))
        .collect();

    // a crossing splits each passing stroke at the crossing; rejoin
    // collinear pairs
    loop {
        let mut merged = false;
        for v in 0..positions.len() {
            if !mergeable[v] {
                continue;
            }
            let inc: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].0 == v || edges[i].1 == v).collect();
            if inc.len() != 2 {
                continue;
            }
            let other = |i: usize| if edges[i].0 == v { edges[i].1 } else { edges[i].0 };
            let (a, c) = (other(inc[0]), other(inc[1]));
            if a == v || c == v || a == c {
                continue;
            }
            if point_segment_distance(&positions[v], &positions[a], &positions[c]) > cfg.cluster_tolerance * fp {
                continue;
            }
            let mut support = std::mem::take(&mut edges[inc[0]].2);
            support.extend(std::mem::take(&mut edges[inc[1]].2));
            edges.remove(inc[1]);
            edges.remove(inc[0]);
            edges.push((a, c, support));
            mergeable[v] = false;
            merged = true;
        }
        if !merged {
            break;
        }
    }

    // drop degenerate edges, fold duplicates
    let mut unique: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (a, b, s) in edges {
        if a == b || (positions[a] - positions[b]).norm() == 0.0 {
            continue;
        }
        unique.entry((a.min(b), a.max(b))).or_default().extend(s);
    }
    if unique.is_empty() {
        return Err(ReconstructError::NothingFitted);
    }
    let mut remap = vec![usize::MAX; positions.len()];
    let mut used = Vec::new();
    for &(a, b) in unique.keys() {
        for v in [a, b] {
            if remap[v] == usize::MAX {
                remap[v] = used.len();
                used.push(positions[v]);
            }
        }
    }
    let specs: Vec<EdgeSpec> = unique.keys().map(|&(a, b)| EdgeSpec::line(remap[a], remap[b])).collect();
    let graph = WireframeGraph::new(used, specs).map_err(|e| ReconstructError::Graph(e.to_string()))?;
    let support: Vec<Vec<usize>> = unique.into_values().collect();
    let residuals = graph
        .edges()
        .iter()
        .zip(&support)
        .map(|(e, s)| {
            let (a, b) = (graph.position(e.endpoints[0]), graph.position(e.endpoints[1]));
            let ss: f64 = s
                .iter()
                .map(|&i| point_segment_distance(&cloud.points[i], &a, &b).powi(2))
                .sum();
            (ss / s.len().max(1) as f64).sqrt()
        })
        .collect();
    Ok(FittedWireframe {
        graph,
        residuals,
        support,
    })
}

/// Where the lines of `ids` meet, if they meet within `reach` of the mean of
/// their ends; otherwise that mean.
fn meeting_point(pieces: &[Piece], ids: impl Iterator<Item = usize>, mean: Vec3, reach: f64) -> Vec3 {
    let lines: Vec<(Vec3, Vec3)> = ids.map(|i| (pieces[i].center, pieces[i].dir)).collect();
    if lines.len() < 2 {
        return mean;
    }
    match nearest_point(&lines) {
        Some(p) if (p - mean).norm() <= reach => p,
        _ => mean,
    }
}

fn push_path(
    new: impl IntoIterator<Item = Piece>,
    start: usize,
    end: usize,
    pieces: &mut Vec<Piece>,
    ends: &mut Vec<End>,
    breaks: &mut Vec<(usize, usize)>,
) {
    let first = pieces.len();
    pieces.extend(new);
    let last = pieces.len() - 1;
    ends.push(End {
        node: start,
        piece: first,
        at_start: true,
    });
    ends.push(End {
        node: end,
        piece: last,
        at_start: false,
    });
    for i in first..last {
        breaks.push((i, i + 1));
    }
}

/// Groups of `0..n` chained together by `close`.
fn single_linkage(n: usize, close: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if close(i, j) {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut label, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}
