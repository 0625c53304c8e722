//! Disparity normalization and the 16-bit PNG codec.
//!
//! cargo run --example depth_codec

use wiredepth::depth::{
    code_disparity, decode_depth_png, depth_to_disparity, disparity_code, disparity_to_depth, encode_depth_png,
};
use wiredepth::{DepthImage, DepthSpace, DisparityConfig, Grid};

fn main() {
    let cfg = DisparityConfig::new(0.5, 2.5).unwrap();
    for z in [0.5, 1.0, 1.5, 2.5] {
        let y = cfg.disparity(z);
        println!("Z={z:.2} -> y={y:.6} -> code {} -> Z={:.6}", disparity_code(y), cfg.depth(y));
    }
    println!("code 0 is reserved for background; one code step is {:.2e}", code_disparity(2));

    // a depth ramp with a hole in the middle
    let (w, h) = (32, 8);
    let img = DepthImage {
        values: Grid::from_fn(w, h, |x, _| 0.5 + 2.0 * x as f64 / (w - 1) as f64),
        valid: Grid::from_fn(w, h, |x, y| !(12..20).contains(&x) || y % 2 == 0),
        config: cfg,
        space: DepthSpace::MetricDepth,
    };
    let y = depth_to_disparity(&img, &cfg).unwrap();
    let (png, sidecar) = encode_depth_png(&y).unwrap();
    let decoded = decode_depth_png(&png, Some(&sidecar)).unwrap();
    let z_back = disparity_to_depth(&decoded, &cfg).unwrap();
    let worst = img
        .values
        .as_slice()
        .iter()
        .zip(z_back.values.as_slice())
        .zip(img.valid.as_slice())
        .filter(|(_, &v)| v)
        .map(|((a, b), _)| ((a - b) / a).abs())
        .fold(0.0, f64::max);
    println!(
        "{} bytes of PNG, {} valid of {} pixels, worst relative depth error after quantization {worst:.2e}",
        png.len(),
        decoded.valid_count(),
        w * h
    );
    println!("sidecar {}", serde_json::to_string(&sidecar).unwrap());
}
