//! Parametric wireframe fixtures.

use std::f64::consts::TAU;

use rand::Rng as _;

use crate::rng::seeded;
use crate::wireframe::{EdgeSpec, WireframeGraph};
use crate::Vec3;

const CUBE_EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Axis-aligned box between two opposite corners, 12 line edges.
pub fn cuboid(lo: Vec3, hi: Vec3) -> WireframeGraph {
    let corners = vec![
        Vec3::new(lo.x, lo.y, lo.z),
        Vec3::new(hi.x, lo.y, lo.z),
        Vec3::new(hi.x, hi.y, lo.z),
        Vec3::new(lo.x, hi.y, lo.z),
        Vec3::new(lo.x, lo.y, hi.z),
        Vec3::new(hi.x, lo.y, hi.z),
        Vec3::new(hi.x, hi.y, hi.z),
        Vec3::new(lo.x, hi.y, hi.z),
    ];
    let edges = CUBE_EDGES.iter().map(|&[a, b]| EdgeSpec::line(a, b)).collect();
    WireframeGraph::new(corners, edges).expect("cuboid is valid")
}

/// Unit cube centred at the origin.
pub fn unit_cube() -> WireframeGraph {
    cuboid(Vec3::repeat(-0.5), Vec3::repeat(0.5))
}

fn ring(center: Vec3, radius: f64, n: usize, phase: f64) -> Vec<Vec3> {
    (0..=n)
        .map(|i| {
            let a = phase + TAU * (i % n) as f64 / n as f64;
            center + Vec3::new(radius * a.cos(), radius * a.sin(), 0.0)
        })
        .collect()
}

/// Closed circle in the plane `z = center.z` as a single self-loop curve.
pub fn circle(center: Vec3, radius: f64, samples: usize) -> WireframeGraph {
    let pts = ring(center, radius, samples, 0.0);
    WireframeGraph::new(vec![pts[0]], vec![EdgeSpec::curve(0, 0, pts)]).expect("circle is valid")
}

/// Cylinder about the z axis: two circles and two silhouette lines.
pub fn cylinder(radius: f64, height: f64, samples: usize) -> WireframeGraph {
    let h = height / 2.0;
    let bottom = ring(Vec3::new(0.0, 0.0, -h), radius, samples, 0.0);
    let top = ring(Vec3::new(0.0, 0.0, h), radius, samples, 0.0);
    let vertices = vec![
        bottom[0],
        top[0],
        Vec3::new(-radius, 0.0, -h),
        Vec3::new(-radius, 0.0, h),
    ];
    let edges = vec![
        EdgeSpec::curve(0, 0, bottom),
        EdgeSpec::curve(1, 1, top),
        EdgeSpec::line(0, 1),
        EdgeSpec::line(2, 3),
    ];
    WireframeGraph::new(vertices, edges).expect("cylinder is valid")
}

/// Regular tetrahedron, 6 line edges.
pub fn tetrahedron() -> WireframeGraph {
    let v = vec![
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(1.0, -1.0, -1.0),
        Vec3::new(-1.0, 1.0, -1.0),
        Vec3::new(-1.0, -1.0, 1.0),
    ];
    let edges = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]
        .iter()
        .map(|&[a, b]| EdgeSpec::line(a, b))
        .collect();
    WireframeGraph::new(v, edges).expect("tetrahedron is valid")
}

/// Triangular prism, 9 line edges.
pub fn triangular_prism() -> WireframeGraph {
    let tri = |z: f64| {
        (0..3).map(move |i| {
            let a = TAU * i as f64 / 3.0 + 0.3;
            Vec3::new(a.cos(), a.sin(), z)
        })
    };
    let vertices: Vec<Vec3> = tri(-0.7).chain(tri(0.7)).collect();
    let edges = [[0, 1], [1, 2], [2, 0], [3, 4], [4, 5], [5, 3], [0, 3], [1, 4], [2, 5]]
        .iter()
        .map(|&[a, b]| EdgeSpec::line(a, b))
        .collect();
    WireframeGraph::new(vertices, edges).expect("prism is valid")
}

/// L-shaped extrusion, 18 line edges.
pub fn l_bracket() -> WireframeGraph {
    let outline = [
        (0.0, 0.0),
        (2.0, 0.0),
        (2.0, 0.8),
        (0.8, 0.8),
        (0.8, 2.0),
        (0.0, 2.0),
    ];
    let mut vertices = Vec::new();
    for z in [0.0, 0.9] {
        for &(x, y) in &outline {
            vertices.push(Vec3::new(x, y, z));
        }
    }
    let mut edges = Vec::new();
    for ring_start in [0, 6] {
        for i in 0..6 {
            edges.push(EdgeSpec::line(ring_start + i, ring_start + (i + 1) % 6));
        }
    }
    for i in 0..6 {
        edges.push(EdgeSpec::line(i, i + 6));
    }
    WireframeGraph::new(vertices, edges).expect("bracket is valid")
}

/// Two disjoint triangles.
pub fn two_triangles() -> WireframeGraph {
    let vertices = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(3.0, 0.0, 0.5),
        Vec3::new(4.0, 0.0, 0.5),
        Vec3::new(3.0, 1.0, 0.5),
    ];
    let edges = [[0, 1], [1, 2], [2, 0], [3, 4], [4, 5], [5, 3]]
        .iter()
        .map(|&[a, b]| EdgeSpec::line(a, b))
        .collect();
    WireframeGraph::new(vertices, edges).expect("triangles are valid")
}

/// Random line-only graph: `vertices` points in the unit cube, `edges` distinct
/// random pairs (fewer if the pair space is exhausted).
pub fn random_lines(seed: u64, vertices: usize, edges: usize) -> WireframeGraph {
    assert!(vertices >= 2);
    let mut rng = seeded(seed);
    let pts: Vec<Vec3> = (0..vertices)
        .map(|_| {
            Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    let max_pairs = vertices * (vertices - 1) / 2;
    let mut seen = std::collections::BTreeSet::new();
    let mut specs = Vec::new();
    while specs.len() < edges.min(max_pairs) {
        let a = rng.gen_range(0..vertices);
        let b = rng.gen_range(0..vertices);
        if a == b || !seen.insert((a.min(b), a.max(b))) {
            continue;
        }
        specs.push(EdgeSpec::line(a, b));
    }
    WireframeGraph::new(pts, specs).expect("random graph is valid")
}

/// Random graph mixing lines and arcs (curved edges bulging off the chord).
pub fn random_mixed(seed: u64, vertices: usize, edges: usize) -> WireframeGraph {
    let base = random_lines(seed, vertices, edges);
    let mut rng = seeded(seed ^ 0x5eed);
    let positions: Vec<Vec3> = base.vertices().iter().map(|v| v.position).collect();
    let specs = base
        .edges()
        .iter()
        .map(|e| {
            if rng.gen_bool(0.3) {
                let a = positions[e.endpoints[0]];
                let b = positions[e.endpoints[1]];
                let bulge = Vec3::new(
                    rng.gen_range(-0.3..0.3),
                    rng.gen_range(-0.3..0.3),
                    rng.gen_range(-0.3..0.3),
                );
                let samples = (0..=16)
                    .map(|i| {
                        let t = i as f64 / 16.0;
                        a + (b - a) * t + bulge * (4.0 * t * (1.0 - t))
                    })
                    .collect();
                EdgeSpec::curve(e.endpoints[0], e.endpoints[1], samples)
            } else {
                EdgeSpec::line(e.endpoints[0], e.endpoints[1])
            }
        })
        .collect();
    WireframeGraph::new(positions, specs).expect("mixed graph is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_sizes() {
        assert_eq!(unit_cube().edges().len(), 12);
        assert_eq!(cylinder(0.5, 1.0, 32).edges().len(), 4);
        assert_eq!(tetrahedron().edges().len(), 6);
        assert_eq!(triangular_prism().edges().len(), 9);
        assert_eq!(l_bracket().edges().len(), 18);
        assert_eq!(random_lines(3, 8, 12).edges().len(), 12);
        assert_eq!(random_mixed(3, 8, 12).edges().len(), 12);
    }
}
