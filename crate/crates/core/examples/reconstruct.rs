//! Render a wireframe, lift its ground-truth disparity back to 3D and fit a
//! line wireframe; writes the cloud as PLY and the fit as JSON.
//!
//! cargo run --release --example reconstruct -- [out_dir]

use std::fs::File;
use std::path::PathBuf;

use wiredepth::reconstruct::{backproject, extract_topology, fit_wireframe, FitConfig, TopologyConfig};
use wiredepth::{rasterize, shapes, DisparityConfig, OrthoCamera, Vec3};

fn main() {
    env_logger::init();
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/reconstruct".into()));
    std::fs::create_dir_all(&out).expect("output directory");

    let g = shapes::unit_cube().normalize_to_unit_sphere().unwrap();
    let cam = OrthoCamera::looking(Vec3::new(0.71, 0.43, 0.56), 1.05, 256, 256).unwrap();
    let radius = 1.5;
    let bundle = rasterize(&g, &cam, radius, &DisparityConfig::default()).unwrap();

    let cloud = backproject(&bundle.mask, &bundle.disparity.values, &cam, &bundle.disparity.config).unwrap();
    let topo = extract_topology(&bundle.mask, &TopologyConfig::for_stroke_radius(radius));
    let fit = fit_wireframe(&topo, &cloud, &cam, &FitConfig::default()).unwrap();

    let fp = cam.footprint();
    println!(
        "{} points, {} skeleton nodes, {} paths -> {} vertices, {} edges",
        cloud.len(),
        topo.nodes.len(),
        topo.paths.len(),
        fit.graph.vertices().len(),
        fit.graph.edges().len()
    );
    for (e, r) in fit.graph.edges().iter().zip(&fit.residuals) {
        println!("edge {:2}: {:?} residual {:.3} px", e.id, e.endpoints, r / fp);
    }
    for v in g.vertices() {
        let nearest = fit
            .graph
            .vertices()
            .iter()
            .map(|f| (f.position - v.position).norm())
            .fold(f64::INFINITY, f64::min);
        println!("corner {}: nearest fitted vertex {:.2} px away", v.id, nearest / fp);
    }

    cloud.write_ply(File::create(out.join("cloud.ply")).unwrap()).unwrap();
    std::fs::write(out.join("fitted.json"), fit.graph.to_wirejson()).unwrap();
    println!("wrote {}", out.display());
}
