//! Write a small shape corpus, split it, render the training dataset and
//! summarize the manifest.
//!
//! cargo run --release --example dataset -- [out_dir]

use std::path::PathBuf;

use wiredepth::pipeline::{
    assign_splits, cmd_dataset, list_shapes, write_split_csv, PartialPolicy, RunConfig, Split,
};
use wiredepth::shapes;

fn main() {
    env_logger::init();
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/dataset".into()));
    let shapes_dir = root.join("shapes");
    std::fs::create_dir_all(&shapes_dir).unwrap();
    let mut corpus = vec![
        ("cube", shapes::unit_cube()),
        ("cylinder", shapes::cylinder(0.4, 1.2, 48)),
        ("l_bracket", shapes::l_bracket()),
        ("prism", shapes::triangular_prism()),
        ("tetrahedron", shapes::tetrahedron()),
    ];
    let names: Vec<String> = (0..15).map(|s| format!("mixed{s:02}")).collect();
    for (s, name) in names.iter().enumerate() {
        corpus.push((name.as_str(), shapes::random_mixed(s as u64, 8, 6 + 3 * s)));
    }
    for (name, g) in &corpus {
        let g = g.normalize_to_unit_sphere().unwrap();
        std::fs::write(shapes_dir.join(format!("{name}.json")), g.to_wirejson()).unwrap();
    }

    let ids: Vec<String> = list_shapes(&shapes_dir).unwrap().into_iter().map(|s| s.id).collect();
    let splits = assign_splits(&ids, &[0.8, 0.1, 0.1], 0).unwrap();
    write_split_csv(std::fs::File::create(root.join("split.csv")).unwrap(), &splits).unwrap();

    let cfg = RunConfig {
        resolution: 128,
        views: 10,
        partial: PartialPolicy::Training,
        output_root: root.join("data"),
        ..Default::default()
    };
    std::fs::create_dir_all(&cfg.output_root).unwrap();
    let map = splits.into_iter().collect();
    let summary = cmd_dataset(&cfg, &shapes_dir, Some(&map)).unwrap();
    for split in Split::ALL {
        let n = summary.entries.iter().filter(|e| e.split == split).count();
        println!("{split}: {n} views");
    }
    let zoomed = summary.entries.iter().filter(|e| e.zoomed).count();
    println!(
        "{} views of {} shapes, {} with partial depth, {zoomed} zoomed -> {}",
        summary.entries.len(),
        summary.shapes,
        summary.with_partial(),
        summary.manifest.display()
    );
}
