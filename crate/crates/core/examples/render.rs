//! Render a shape from a few hemisphere views and write the sketch mask,
//! 16-bit disparity PNG and camera JSON of each.
//!
//! cargo run --release --example render -- [out_dir]

use std::path::PathBuf;

use wiredepth::camera::sample_hemisphere_views;
use wiredepth::depth::{write_depth_file, write_mask_file};
use wiredepth::{rasterize, shapes, DisparityConfig};

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/render".into()));
    std::fs::create_dir_all(&out).unwrap();
    let g = shapes::l_bracket().normalize_to_unit_sphere().unwrap();
    let cfg = DisparityConfig::default();

    for (i, cam) in sample_hemisphere_views(4, 7, 1.05, 256).iter().enumerate() {
        let bundle = rasterize(&g, cam, 1.5, &cfg).unwrap();
        let depths: Vec<f64> = bundle
            .depth
            .values
            .as_slice()
            .iter()
            .zip(bundle.mask.as_slice())
            .filter(|(_, &m)| m)
            .map(|(z, _)| *z)
            .collect();
        let (near, far) = depths.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &z| (a.min(z), b.max(z)));
        let overlaps = bundle.covers.as_slice().iter().filter(|c| c.len() > 1).count();
        println!(
            "view {i} {:.2?}: {} stroke pixels, depth {near:.3}..{far:.3}, {overlaps} pixels with several edges",
            cam.view().as_slice(),
            bundle.foreground()
        );
        write_mask_file(&out.join(format!("v{i}_mask.png")), &bundle.mask).unwrap();
        write_depth_file(&out.join(format!("v{i}_depth.png")), &bundle.disparity).unwrap();
        std::fs::write(out.join(format!("v{i}_camera.json")), serde_json::to_string_pretty(cam).unwrap()).unwrap();
    }
    println!("wrote {}", out.display());
}
