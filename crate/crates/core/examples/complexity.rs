//! Accidental pixel ratio and curve complexity across views, and the
//! stratification used for error-versus-difficulty curves.
//!
//! cargo run --release --example complexity

use wiredepth::camera::sample_hemisphere_views;
use wiredepth::complexity::{score, stratify, AprConfig, StratifyKey};
use wiredepth::{rasterize, shapes, DisparityConfig, Vec3};

fn main() {
    let cfg = DisparityConfig::default();
    let apr = AprConfig::default();
    let fixtures = [
        ("cube", shapes::unit_cube()),
        ("cylinder", shapes::cylinder(0.5, 1.0, 48)),
        ("l_bracket", shapes::l_bracket()),
        ("random", shapes::random_mixed(5, 10, 20)),
        ("ring", shapes::circle(Vec3::zeros(), 1.0, 64)),
    ];
    let mut reports = Vec::new();
    for (name, g) in fixtures {
        let g = g.normalize_to_unit_sphere().unwrap();
        let views: Vec<_> = sample_hemisphere_views(20, 1, 1.05, 128)
            .iter()
            .map(|c| score(&rasterize(&g, c, 1.5, &cfg).unwrap(), &g, &apr))
            .collect();
        let aprs: Vec<f64> = views.iter().map(|r| r.apr).collect();
        println!(
            "{name:10} complexity {:2}  APR min {:.3} mean {:.3} max {:.3}",
            views[0].curve_complexity,
            aprs.iter().copied().fold(f64::INFINITY, f64::min),
            aprs.iter().sum::<f64>() / aprs.len() as f64,
            aprs.iter().copied().fold(0.0, f64::max)
        );
        reports.extend(views);
    }
    for bin in stratify(&reports, &[0.02, 0.05, 0.1, 0.2], StratifyKey::Apr).unwrap() {
        println!(
            "APR [{:.2}, {:.2}): {:3} views, mean complexity {:.1}",
            bin.lower, bin.upper, bin.count, bin.mean_complexity
        );
    }
}
