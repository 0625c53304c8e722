//! Score noisy predictions against a rendered disparity map and reduce K
//! draws per sample to the Average and Best columns.
//!
//! cargo run --release --example metrics

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use wiredepth::camera::sample_hemisphere_views;
use wiredepth::metrics::{aggregate, evaluate, write_table_csv, AggregationMode};
use wiredepth::{rasterize, shapes, DisparityConfig};

fn main() {
    let g = shapes::triangular_prism().normalize_to_unit_sphere().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let k = 5;
    let mut groups = Vec::new();
    for cam in sample_hemisphere_views(10, 2, 1.05, 64) {
        let b = rasterize(&g, &cam, 1.5, &DisparityConfig::default()).unwrap();
        let gt = b.disparity.values.as_slice();
        let draws = (0..k)
            .map(|i| {
                let noise = Normal::new(0.0, 0.02 * (i + 1) as f64).unwrap();
                let pred: Vec<f64> = gt.iter().map(|y| (y + noise.sample(&mut rng)).clamp(0.0, 1.0)).collect();
                evaluate(&pred, gt, b.mask.as_slice()).unwrap()
            })
            .collect::<Vec<_>>();
        groups.push(draws);
    }
    let first = &groups[0][0];
    println!(
        "first draw: MAE {:.4} NMAE {:.4} AbsRel {:.4} delta<1.25 {:.3} over {} pixels",
        first.mae, first.nmae, first.absrel, first.delta_125, first.valid_pixels
    );
    let rows = vec![
        ("noisy".to_string(), aggregate(&groups, AggregationMode::Average).unwrap()),
        ("noisy".to_string(), aggregate(&groups, AggregationMode::Best).unwrap()),
    ];
    write_table_csv(std::io::stdout().lock(), &rows).unwrap();
}
