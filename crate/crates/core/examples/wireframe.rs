//! Build a wireframe, read one from OBJ line elements, normalize it into the
//! unit sphere and inspect its adjacency.
//!
//! cargo run --example wireframe

use wiredepth::wireframe::{build_adjacency, EdgeSpec};
use wiredepth::{shapes, Vec3, WireframeGraph};

const BRACKET_OBJ: &str = "\
# a bent wire
v 0 0 0
v 2 0 0
v 2 1 0
v 2 1 3
l 1 2 3 4
";

fn main() {
    let cube = shapes::unit_cube();
    let sphere = cube.bounding_sphere();
    println!(
        "cube: {} vertices, {} edges, bounding sphere r={:.3}",
        cube.vertices().len(),
        cube.edges().len(),
        sphere.radius
    );

    let wire = WireframeGraph::from_obj(BRACKET_OBJ).unwrap();
    let unit = wire.normalize_to_unit_sphere().unwrap();
    println!("obj polyline: {} edges, normalized radius {:.3}", unit.edges().len(), unit.bounding_sphere().radius);

    let arc: Vec<Vec3> = (0..=8)
        .map(|i| {
            let a = std::f64::consts::PI * i as f64 / 8.0;
            Vec3::new(a.cos(), a.sin(), 0.0)
        })
        .collect();
    let mixed = WireframeGraph::new(
        vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)],
        vec![EdgeSpec::line(0, 1), EdgeSpec::curve(0, 1, arc)],
    )
    .unwrap();
    println!("half disc: {} lines, {} curves", mixed.line_count(), mixed.curve_count());

    let adj = build_adjacency(&cube);
    for v in 0..adj.vertex_count() {
        println!("  cube vertex {v}: degree {} via edges {:?}", adj.degree(v), adj.incident(v));
    }
    println!("components of two triangles: {:?}", build_adjacency(&shapes::two_triangles()).components(&shapes::two_triangles()));

    println!("{}", mixed.to_wirejson());
}
