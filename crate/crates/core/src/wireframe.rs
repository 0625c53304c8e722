//! 3D wireframe graph model and its interchange formats.
//!
//! A wireframe is a set of vertices joined by edges; every edge carries an
//! ordered polyline discretization so curves need no parametric form. Two
//! input formats are supported:
//!
//! * WireJson: `{"vertices": [[x,y,z],...], "edges": [{"v":[a,b], "kind":"line"|"curve", "samples":[[x,y,z],...]}, ...]}`.
//!   `samples` may be omitted for line edges.
//! * OBJ: only `v` and `l` records are read; every polyline segment becomes a
//!   line edge.

use std::collections::VecDeque;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec3;

/// Vertex coincidence and collinearity tolerance, model units.
pub const COINCIDENCE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum WireframeError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("edge {edge}: {reason}")]
    InvalidEdge { edge: usize, reason: String },
    #[error("vertex {vertex}: non-finite position")]
    InvalidVertex { vertex: usize },
    #[error("graph has no edges")]
    Empty,
    #[error("degenerate graph: bounding radius is zero")]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Line,
    Curve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WireFormat {
    WireJson,
    ObjLines,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: usize,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: usize,
    pub endpoints: [usize; 2],
    pub kind: EdgeKind,
    pub samples: Vec<Vec3>,
}

impl Edge {
    pub fn is_self_loop(&self) -> bool {
        self.endpoints[0] == self.endpoints[1]
    }

    /// Polyline length in model units.
    pub fn length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn other_end(&self, v: usize) -> usize {
        if self.endpoints[0] == v {
            self.endpoints[1]
        } else {
            self.endpoints[0]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingSphere {
    pub center: Vec3,
    pub radius: f64,
}

/// Validated wireframe. Vertex and edge ids equal their list positions.
#[derive(Debug, Clone, PartialEq)]
pub struct WireframeGraph {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    bounds: BoundingSphere,
}

/// Edge description used to build a graph before validation.
#[derive(Debug, Clone)]
pub struct EdgeSpec {
    pub endpoints: [usize; 2],
    pub kind: EdgeKind,
    /// Polyline samples; `None` means the straight segment between endpoints.
    pub samples: Option<Vec<Vec3>>,
}

impl EdgeSpec {
    pub fn line(a: usize, b: usize) -> Self {
        Self {
            endpoints: [a, b],
            kind: EdgeKind::Line,
            samples: None,
        }
    }

    pub fn curve(a: usize, b: usize, samples: Vec<Vec3>) -> Self {
        Self {
            endpoints: [a, b],
            kind: EdgeKind::Curve,
            samples: Some(samples),
        }
    }
}

impl WireframeGraph {
    /// Validate and assemble a graph.
    pub fn new(positions: Vec<Vec3>, edges: Vec<EdgeSpec>) -> Result<Self, WireframeError> {
        if edges.is_empty() {
            return Err(WireframeError::Empty);
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(WireframeError::InvalidVertex { vertex: i });
            }
        }
        let vertices: Vec<Vertex> = positions
            .into_iter()
            .enumerate()
            .map(|(id, position)| Vertex { id, position })
            .collect();
        let edges = edges
            .into_iter()
            .enumerate()
            .map(|(id, spec)| validate_edge(id, spec, &vertices))
            .collect::<Result<Vec<_>, _>>()?;
        let bounds = bounding_sphere(&vertices, &edges);
        Ok(Self {
            vertices,
            edges,
            bounds,
        })
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn bounding_sphere(&self) -> BoundingSphere {
        self.bounds
    }

    pub fn position(&self, v: usize) -> Vec3 {
        self.vertices[v].position
    }

    /// Iterate over every polyline sample of every edge.
    pub fn samples(&self) -> impl Iterator<Item = &Vec3> {
        self.edges.iter().flat_map(|e| e.samples.iter())
    }

    /// Apply `p ↦ scale·p + offset` to every vertex and sample.
    pub fn transformed(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<Self, WireframeError> {
        let positions = self.vertices.iter().map(|v| f(&v.position)).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| EdgeSpec {
                endpoints: e.endpoints,
                kind: e.kind,
                samples: Some(e.samples.iter().map(&f).collect()),
            })
            .collect();
        Self::new(positions, edges)
    }

    /// Translate and uniformly scale so the bounding sphere is the unit
    /// sphere at the origin.
    pub fn normalize_to_unit_sphere(&self) -> Result<Self, WireframeError> {
        let BoundingSphere { center, radius } = self.bounds;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(WireframeError::Degenerate);
        }
        if center.norm() <= 1e-12 && (radius - 1.0).abs() <= 1e-12 {
            return Ok(self.clone());
        }
        let inv = 1.0 / radius;
        self.transformed(|p| (p - center) * inv)
    }

    pub fn line_count(&self) -> usize {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Line).count()
    }

    pub fn curve_count(&self) -> usize {
        self.edges.len() - self.line_count()
    }

    /// Load from a byte stream in the given format.
    pub fn load(mut source: impl Read, format: WireFormat) -> Result<Self, WireframeError> {
        let mut text = String::new();
        source.read_to_string(&mut text)?;
        match format {
            WireFormat::WireJson => Self::from_wirejson(&text),
            WireFormat::ObjLines => Self::from_obj(&text),
        }
    }

    pub fn from_wirejson(text: &str) -> Result<Self, WireframeError> {
        let doc: WireJson = serde_json::from_str(text).map_err(|e| WireframeError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let positions = doc.vertices.iter().map(|p| Vec3::from(*p)).collect();
        let edges = doc
            .edges
            .into_iter()
            .map(|e| EdgeSpec {
                endpoints: e.v,
                kind: e.kind,
                samples: e
                    .samples
                    .map(|s| s.into_iter().map(Vec3::from).collect::<Vec<_>>()),
            })
            .collect();
        Self::new(positions, edges)
    }

    pub fn from_obj(text: &str) -> Result<Self, WireframeError> {
        let mut positions = Vec::new();
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let mut fields = line.split_whitespace();
            let parse_err = |message: String| WireframeError::Parse {
                line: lineno + 1,
                column: 1,
                message,
            };
            match fields.next() {
                Some("v") => {
                    let coords: Vec<f64> = fields
                        .take(3)
                        .map(|f| f.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| parse_err(format!("bad vertex coordinate: {e}")))?;
                    if coords.len() != 3 {
                        return Err(parse_err("vertex needs three coordinates".into()));
                    }
                    positions.push(Vec3::new(coords[0], coords[1], coords[2]));
                }
                Some("l") => {
                    let n = positions.len() as i64;
                    let ids = fields
                        .map(|f| {
                            // `l 1/1 2/2` carries texture indices after the slash
                            let idx = f.split('/').next().unwrap_or(f);
                            let i: i64 = idx
                                .parse()
                                .map_err(|e| parse_err(format!("bad line index {f:?}: {e}")))?;
                            let resolved = if i < 0 { n + i } else { i - 1 };
                            if i == 0 || resolved < 0 {
                                return Err(parse_err(format!("line index {i} out of range")));
                            }
                            Ok(resolved as usize)
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    if ids.len() < 2 {
                        return Err(parse_err("line element needs two indices".into()));
                    }
                    for w in ids.windows(2) {
                        edges.push(EdgeSpec::line(w[0], w[1]));
                    }
                }
                _ => {}
            }
        }
        Self::new(positions, edges)
    }

    /// Canonical WireJson: every edge carries its samples.
    pub fn to_wirejson(&self) -> String {
        let doc = WireJson {
            vertices: self.vertices.iter().map(|v| v.position.into()).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| WireJsonEdge {
                    v: e.endpoints,
                    kind: e.kind,
                    samples: Some(e.samples.iter().map(|p| (*p).into()).collect()),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("wirejson serialization")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct WireJson {
    vertices: Vec<[f64; 3]>,
    edges: Vec<WireJsonEdge>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WireJsonEdge {
    v: [usize; 2],
    kind: EdgeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<[f64; 3]>>,
}

fn validate_edge(id: usize, spec: EdgeSpec, vertices: &[Vertex]) -> Result<Edge, WireframeError> {
    let invalid = |reason: String| WireframeError::InvalidEdge { edge: id, reason };
    for &v in &spec.endpoints {
        if v >= vertices.len() {
            return Err(invalid(format!("references missing vertex {v}")));
        }
    }
    let a = vertices[spec.endpoints[0]].position;
    let b = vertices[spec.endpoints[1]].position;
    let raw = spec.samples.unwrap_or_else(|| vec![a, b]);
    if raw.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(invalid("non-finite sample".into()));
    }
    // drop consecutive duplicates, keeping the final sample pinned
    let mut samples: Vec<Vec3> = Vec::with_capacity(raw.len());
    for p in raw {
        match samples.last() {
            Some(last) if (p - last).norm() <= COINCIDENCE_TOL => {
                let n = samples.len();
                samples[n - 1] = if n == 1 { samples[0] } else { p };
            }
            _ => samples.push(p),
        }
    }
    if samples.len() < 2 {
        return Err(invalid("fewer than two distinct samples".into()));
    }
    if (samples[0] - a).norm() > COINCIDENCE_TOL {
        return Err(invalid("first sample does not coincide with its start vertex".into()));
    }
    if (samples[samples.len() - 1] - b).norm() > COINCIDENCE_TOL {
        return Err(invalid("last sample does not coincide with its end vertex".into()));
    }
    if spec.kind == EdgeKind::Line {
        let dir = b - a;
        let len = dir.norm();
        if len <= COINCIDENCE_TOL {
            return Err(invalid("line edge has coincident endpoints".into()));
        }
        let dir = dir / len;
        for p in &samples {
            let off = p - a;
            if (off - dir * off.dot(&dir)).norm() > COINCIDENCE_TOL {
                return Err(invalid("line edge samples are not collinear".into()));
            }
        }
    }
    Ok(Edge {
        id,
        endpoints: spec.endpoints,
        kind: spec.kind,
        samples,
    })
}

/// Sphere centred on the axis-aligned bounding box of all geometry.
fn bounding_sphere(vertices: &[Vertex], edges: &[Edge]) -> BoundingSphere {
    let points = || {
        vertices
            .iter()
            .map(|v| &v.position)
            .chain(edges.iter().flat_map(|e| e.samples.iter()))
    };
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let center = (lo + hi) * 0.5;
    let radius = points().map(|p| (p - center).norm()).fold(0.0, f64::max);
    BoundingSphere { center, radius }
}

/// Vertex id → incident edge ids, ascending. Self-loops appear once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    buckets: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn build(g: &WireframeGraph) -> Self {
        let mut buckets = vec![Vec::new(); g.vertices().len()];
        for e in g.edges() {
            buckets[e.endpoints[0]].push(e.id);
            if !e.is_self_loop() {
                buckets[e.endpoints[1]].push(e.id);
            }
        }
        for b in &mut buckets {
            b.sort_unstable();
        }
        Self { buckets }
    }

    pub fn incident(&self, v: usize) -> &[usize] {
        &self.buckets[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.buckets[v].len()
    }

    pub fn vertex_count(&self) -> usize {
        self.buckets.len()
    }

    /// Total bucket entries: `2·|E|` minus the number of self-loops.
    pub fn total_entries(&self) -> usize {
        self.buckets.iter().map(Vec::len).sum()
    }

    /// Vertex sets of connected components, each sorted, ordered by smallest
    /// member. Isolated vertices form singleton components.
    pub fn components(&self, g: &WireframeGraph) -> Vec<Vec<usize>> {
        let n = self.buckets.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &e in &self.buckets[v] {
                    let w = g.edges()[e].other_end(v);
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

pub fn build_adjacency(g: &WireframeGraph) -> Adjacency {
    Adjacency::build(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    const CUBE_JSON: &str = r#"{
        "vertices": [[-0.5,-0.5,-0.5],[0.5,-0.5,-0.5],[0.5,0.5,-0.5],[-0.5,0.5,-0.5],
                     [-0.5,-0.5,0.5],[0.5,-0.5,0.5],[0.5,0.5,0.5],[-0.5,0.5,0.5]],
        "edges": [
            {"v":[0,1],"kind":"line"},{"v":[1,2],"kind":"line"},{"v":[2,3],"kind":"line"},{"v":[3,0],"kind":"line"},
            {"v":[4,5],"kind":"line"},{"v":[5,6],"kind":"line"},{"v":[6,7],"kind":"line"},{"v":[7,4],"kind":"line"},
            {"v":[0,4],"kind":"line"},{"v":[1,5],"kind":"line"},{"v":[2,6],"kind":"line"},{"v":[3,7],"kind":"line"}
        ]}"#;

    #[test]
    fn loads_unit_cube() {
        let g = WireframeGraph::load(CUBE_JSON.as_bytes(), WireFormat::WireJson).unwrap();
        assert_eq!(g.vertices().len(), 8);
        assert_eq!(g.edges().len(), 12);
        let b = g.bounding_sphere();
        assert!(b.center.norm() < 1e-15);
        assert!((b.radius - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn dangling_reference_names_edge() {
        let text = r#"{"vertices":[[0,0,0],[1,0,0]],"edges":[{"v":[0,1],"kind":"line"},{"v":[1,99],"kind":"line"}]}"#;
        match WireframeGraph::from_wirejson(text) {
            Err(WireframeError::InvalidEdge { edge, reason }) => {
                assert_eq!(edge, 1);
                assert!(reason.contains("99"));
            }
            other => panic!("expected dangling edge error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = WireframeGraph::from_wirejson("{\"vertices\": [[0,0,0],\n  oops]}").unwrap_err();
        match err {
            WireframeError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_graph_rejected() {
        let err = WireframeGraph::from_wirejson(r#"{"vertices":[[0,0,0]],"edges":[]}"#).unwrap_err();
        assert!(matches!(err, WireframeError::Empty));
    }

    #[test]
    fn closed_circle_is_a_self_loop_curve() {
        let circle = shapes::circle(Vec3::zeros(), 1.0, 32);
        assert_eq!(circle.vertices().len(), 1);
        assert_eq!(circle.edges().len(), 1);
        assert_eq!(circle.edges()[0].kind, EdgeKind::Curve);
        assert!(circle.edges()[0].is_self_loop());
        // same samples tagged as a line must be rejected
        let samples = circle.edges()[0].samples.clone();
        let bad = WireframeGraph::new(
            vec![samples[0]],
            vec![EdgeSpec {
                endpoints: [0, 0],
                kind: EdgeKind::Line,
                samples: Some(samples),
            }],
        );
        assert!(matches!(bad, Err(WireframeError::InvalidEdge { edge: 0, .. })));
    }

    #[test]
    fn non_collinear_line_rejected() {
        let err = WireframeGraph::new(
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0)],
            vec![EdgeSpec {
                endpoints: [0, 1],
                kind: EdgeKind::Line,
                samples: Some(vec![Vec3::zeros(), Vec3::new(0.5, 0.1, 0.0), Vec3::new(1.0, 0.0, 0.0)]),
            }],
        );
        assert!(err.is_err());
    }

    #[test]
    fn obj_lines_import() {
        let text = "# square\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nl 1 2 3 4 1\nf 1 2 3\n";
        let g = WireframeGraph::load(text.as_bytes(), WireFormat::ObjLines).unwrap();
        assert_eq!(g.vertices().len(), 4);
        assert_eq!(g.edges().len(), 4);
        assert!(g.edges().iter().all(|e| e.kind == EdgeKind::Line));
        let err = WireframeGraph::from_obj("v 0 0 0\nv 1 x 0\n").unwrap_err();
        assert!(matches!(err, WireframeError::Parse { line: 2, .. }));
    }

    #[test]
    fn normalize_cube_corner_box() {
        let g = shapes::cuboid(Vec3::new(0.0, 0.0, 0.0), Vec3::new(2.0, 2.0, 2.0));
        let n = g.normalize_to_unit_sphere().unwrap();
        let b = n.bounding_sphere();
        assert!(b.center.norm() < 1e-12);
        assert!((b.radius - 1.0).abs() < 1e-12);
        let again = n.normalize_to_unit_sphere().unwrap();
        assert_eq!(n, again);
        for v in n.vertices() {
            assert!((v.position.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_adjacency_degrees() {
        let adj = build_adjacency(&shapes::unit_cube());
        assert!((0..8).all(|v| adj.degree(v) == 3));
        assert_eq!(adj.total_entries(), 24);
    }

    #[test]
    fn self_loop_bucket() {
        let g = shapes::circle(Vec3::zeros(), 1.0, 16);
        let adj = build_adjacency(&g);
        assert_eq!(adj.incident(0), &[0]);
        assert_eq!(adj.total_entries(), 2 * g.edges().len() - 1);
    }

    #[test]
    fn wirejson_round_trip_is_canonical() {
        let g = WireframeGraph::from_wirejson(CUBE_JSON).unwrap();
        let s = g.to_wirejson();
        let g2 = WireframeGraph::from_wirejson(&s).unwrap();
        assert_eq!(g, g2);
        assert_eq!(s, g2.to_wirejson());
    }
}
