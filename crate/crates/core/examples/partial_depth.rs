//! Simulate partially drawn sketches by revealing edges breadth-first until
//! a target fraction of the stroke pixels carries depth.
//!
//! cargo run --release --example partial_depth

use wiredepth::partial::{bfs_partial_mask, bfs_partial_mask_with, sample_training_condition, CoverageMeasure};
use wiredepth::{rasterize, shapes, DisparityConfig, OrthoCamera, Vec3};

fn main() {
    let g = shapes::l_bracket().normalize_to_unit_sphere().unwrap();
    let cam = OrthoCamera::looking(Vec3::new(0.5, 0.35, 0.8), 1.05, 128, 128).unwrap();
    let bundle = rasterize(&g, &cam, 1.5, &DisparityConfig::default()).unwrap();

    for k in [0.1, 0.25, 0.5, 0.75, 1.0] {
        let p = bfs_partial_mask(&bundle, &g, k, 3).unwrap();
        println!(
            "k={k:.2}: {:2} edges revealed, pixel coverage {:.3}, reveal order {:?}",
            p.revealed.len(),
            p.coverage,
            p.revealed
        );
    }
    let by_edges = bfs_partial_mask_with(&bundle, &g, 0.5, 3, CoverageMeasure::Edges).unwrap();
    println!("half the edges by count: {} edges, pixel coverage {:.3}", by_edges.revealed.len(), by_edges.coverage);

    let draws = 1000;
    let empty = (0..draws).filter(|&s| sample_training_condition(&bundle, &g, s).revealed.is_empty()).count();
    println!("training conditions: {empty} of {draws} empty");
}
