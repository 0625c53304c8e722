//! Run the isometric benchmark with the constant mean-disparity baseline and
//! print its tables and difficulty curves.
//!
//! cargo run --release --example benchmark -- [out_dir]

use std::path::PathBuf;

use wiredepth::complexity::StratifyKey;
use wiredepth::pipeline::{
    cmd_benchmark, write_benchmark_tables, write_mean_baseline, RunConfig, APR_BOUNDS, COMPLEXITY_BOUNDS,
};
use wiredepth::shapes;

fn main() {
    let root = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/benchmark".into()));
    let shapes_dir = root.join("shapes");
    std::fs::create_dir_all(&shapes_dir).unwrap();
    let mut ids = Vec::new();
    for s in 0..12u64 {
        let g = shapes::random_mixed(s, 10, 4 + 4 * s as usize).normalize_to_unit_sphere().unwrap();
        let id = format!("shape{s:02}");
        std::fs::write(shapes_dir.join(format!("{id}.json")), g.to_wirejson()).unwrap();
        ids.push(id);
    }

    let cfg = RunConfig {
        resolution: 128,
        ..Default::default()
    };
    let preds = root.join("predictions");
    let draws = 3;
    write_mean_baseline(&cfg, &shapes_dir, &ids, &preds, draws).unwrap();
    let report = cmd_benchmark(&cfg, &shapes_dir, &ids, &preds, draws).unwrap();
    println!("{} viewpoints x {draws} draws", report.viewpoints);
    for agg in [&report.average, &report.best] {
        println!(
            "{:?}: NMAE {:.4} ± {:.4}, AbsRel {:.4}, delta {:.3}",
            agg.mode, agg.nmae.mean, agg.nmae.std_err, agg.absrel.mean, agg.delta_125.mean
        );
    }
    for (key, bounds) in [(StratifyKey::Complexity, &COMPLEXITY_BOUNDS), (StratifyKey::Apr, &APR_BOUNDS)] {
        for row in report.stratified(key, bounds).unwrap() {
            println!(
                "{key:?} [{}, {}): {:2} views, NMAE {:.4}",
                row.lower, row.upper, row.count, row.nmae_average
            );
        }
    }
    write_benchmark_tables(&report, &root.join("tables"), "mean-baseline").unwrap();
    println!("tables in {}", root.join("tables").display());
}
