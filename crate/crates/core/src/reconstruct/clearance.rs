//! How far a view is from the accidents that make a line drawing ambiguous.

use crate::camera::OrthoCamera;
use crate::wireframe::WireframeGraph;

type P2 = (f64, f64);

fn dist(a: P2, b: P2) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn seg_dist(p: P2, a: P2, b: P2) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    dist(p, (a.0 + t * dx, a.1 + t * dy))
}

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn segments_cross(a: P2, b: P2, c: P2, d: P2) -> bool {
    let (d1, d2) = (cross(c, d, a), cross(c, d, b));
    let (d3, d4) = (cross(a, b, c), cross(a, b, d));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Unsigned angle between two image directions, in `[0°, 90°]`.
fn line_angle(u: P2, v: P2) -> f64 {
    let c = (u.0 * v.0 + u.1 * v.1).abs() / (u.0.hypot(u.1) * v.0.hypot(v.1));
    c.min(1.0).acos().to_degrees()
}

/// Separations of a graph's straight edges as drawn by one camera, in
/// pixels and degrees. Each field is `INFINITY` when nothing is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewClearance {
    /// Between any two projected vertices.
    pub vertex_separation: f64,
    /// From a projected vertex to a projected edge not incident to it.
    pub vertex_to_edge: f64,
    /// Shortest projected edge.
    pub edge_length: f64,
    /// Between two edges sharing a vertex, measured at that vertex.
    pub corner_angle: f64,
    /// Between two non-adjacent edges whose projections cross.
    pub crossing_angle: f64,
}

impl ViewClearance {
    pub fn measure(g: &WireframeGraph, cam: &OrthoCamera) -> Self {
        let pv: Vec<P2> = g
            .vertices()
            .iter()
            .map(|v| {
                let (x, y, _) = cam.project(&v.position);
                (x, y)
            })
            .collect();
        let mut c = Self {
            vertex_separation: f64::INFINITY,
            vertex_to_edge: f64::INFINITY,
            edge_length: f64::INFINITY,
            corner_angle: f64::INFINITY,
            crossing_angle: f64::INFINITY,
        };
        for i in 0..pv.len() {
            for j in i + 1..pv.len() {
                c.vertex_separation = c.vertex_separation.min(dist(pv[i], pv[j]));
            }
        }
        let edges = g.edges();
        for e in edges {
            let [a, b] = e.endpoints;
            c.edge_length = c.edge_length.min(dist(pv[a], pv[b]));
            for (v, &p) in pv.iter().enumerate() {
                if v != a && v != b {
                    c.vertex_to_edge = c.vertex_to_edge.min(seg_dist(p, pv[a], pv[b]));
                }
            }
        }
        for (i, e) in edges.iter().enumerate() {
            for f in &edges[i + 1..] {
                let shared = e.endpoints.iter().find(|v| f.endpoints.contains(v));
                let [a, b] = e.endpoints;
                let [p, q] = f.endpoints;
                match shared {
                    Some(&v) => {
                        let (u, w) = (pv[e.other_end(v)], pv[f.other_end(v)]);
                        let (u, w) = ((u.0 - pv[v].0, u.1 - pv[v].1), (w.0 - pv[v].0, w.1 - pv[v].1));
                        let cos = (u.0 * w.0 + u.1 * w.1) / (u.0.hypot(u.1) * w.0.hypot(w.1));
                        c.corner_angle = c.corner_angle.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
                    }
                    None if segments_cross(pv[a], pv[b], pv[p], pv[q]) => {
                        let u = (pv[b].0 - pv[a].0, pv[b].1 - pv[a].1);
                        let w = (pv[q].0 - pv[p].0, pv[q].1 - pv[p].1);
                        c.crossing_angle = c.crossing_angle.min(line_angle(u, w));
                    }
                    None => {}
                }
            }
        }
        c
    }

    /// True when every separation is at least the given bound.
    pub fn at_least(&self, pixels: f64, degrees: f64) -> bool {
        self.vertex_separation >= pixels
            && self.vertex_to_edge >= pixels
            && self.edge_length >= pixels
            && self.corner_angle >= degrees
            && self.crossing_angle >= degrees
    }
}
