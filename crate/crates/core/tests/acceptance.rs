//! The ten acceptance criteria. Each test prints one `PASS` / `FAIL` line
//! and then asserts. They share a lock so that wall-clock measurements are
//! not disturbed by each other.

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_metrics, brute_raster, fixture_graphs, hausdorff, unit, TwoPointDenoiser};
use wiredepth::camera::sample_hemisphere_views;
use wiredepth::complexity::{accidental_pixels, curve_complexity, score, AprConfig};
use wiredepth::depth::{depth_to_disparity, disparity_to_depth};
use wiredepth::diffusion::{
    forward_noise, ldm_loss, ldm_loss_value, necker_fixture, regress, sample_many, train_denoiser,
    train_regressor, two_mode_experiment, ConditionTensor, DenoiserConfig, DiffusionSchedule, OutputParam,
    TinyDenoiser, TrainConfig, TrainingPair, TwoModeConfig,
};
use wiredepth::metrics::{aggregate, evaluate, AggregationMode};
use wiredepth::partial::{bfs_partial_mask, sample_training_condition};
use wiredepth::pipeline::{
    assign_splits, benchmark_plan, cmd_dataset, read_split_csv, PartialPolicy, RunConfig, Split, DEFAULT_RATIOS,
};
use wiredepth::reconstruct::{backproject, extract_topology, fit_wireframe, FitConfig, TopologyConfig, ViewClearance};
use wiredepth::rng::derive;
use wiredepth::wireframe::build_adjacency;
use wiredepth::{
    rasterize, shapes, DepthImage, DepthSpace, DisparityConfig, Grid, OrthoCamera, Vec3, WireframeGraph,
};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(id: u32, name: &str, ok: bool, elapsed: Duration, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    // straight to the process stdout so the line survives test output capture
    let mut out = std::io::stdout().lock();
    writeln!(out, "{tag} criterion {id:2} {name} ({:.2}s): {detail}", elapsed.as_secs_f64()).unwrap();
    out.flush().unwrap();
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

#[test]
fn c01_disparity_algebra() {
    let _g = serial();
    let t0 = Instant::now();
    let cfg = DisparityConfig::new(0.5, 2.5).unwrap();
    let zs: Vec<f64> = (0..=1000).map(|i| 0.5 + 2.0 * i as f64 / 1000.0).chain([1.0]).collect();
    let img = DepthImage {
        values: Grid::from_vec(zs.len(), 1, zs.clone()).unwrap(),
        valid: Grid::new(zs.len(), 1, true),
        config: cfg,
        space: DepthSpace::MetricDepth,
    };
    let y = depth_to_disparity(&img, &cfg).unwrap();
    let back = disparity_to_depth(&y, &cfg).unwrap();
    let ys = y.values.as_slice();
    let near = ys[0];
    let far = ys[1000];
    // (1/1 - 1/2.5) / (1/0.5 - 1/2.5) = 0.6 / 1.6
    let at_one = *ys.last().unwrap();
    let worst = zs
        .iter()
        .zip(back.values.as_slice())
        .map(|(z, b)| ((z - b) / z).abs())
        .fold(0.0, f64::max);
    let elapsed = t0.elapsed();
    let ok = near == 1.0 && far == 0.0 && (at_one - 0.375).abs() < 1e-15 && worst < 1e-9 && elapsed.as_secs_f64() < 1.0;
    verdict(
        1,
        "disparity algebra",
        ok,
        elapsed,
        &format!("near {near}, far {far}, Z=1 -> {at_one}, worst round trip {worst:.1e}"),
    );
}

#[test]
fn c02_raster_oracle() {
    let _g = serial();
    let t0 = Instant::now();
    let cfg = DisparityConfig::default();
    let fixtures = fixture_graphs();
    let mut views = 0;
    let mut mismatches = Vec::new();
    for (i, (name, g)) in fixtures.iter().enumerate() {
        assert!(g.edges().len() <= 20, "{name} has {} edges", g.edges().len());
        for (j, cam) in sample_hemisphere_views(2, 40 + i as u64, 1.05, 64).iter().enumerate() {
            let radius = if j == 0 { 1.5 } else { 0.8 };
            let fast = rasterize(g, cam, radius, &cfg).unwrap();
            let slow = brute_raster(g, cam, radius, &cfg);
            views += 1;
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            let covers: Vec<Vec<(usize, f64)>> = fast
                .covers
                .as_slice()
                .iter()
                .map(|hits| hits.iter().map(|h| (h.edge, h.depth)).collect())
                .collect();
            let same = fast.mask.as_slice() == slow.mask.as_slice()
                && bits(fast.depth.values.as_slice()) == bits(&slow.depth)
                && fast.depth.valid.as_slice() == slow.mask.as_slice()
                && bits(fast.disparity.values.as_slice()) == bits(&slow.disparity)
                && covers == slow.covers;
            if !same {
                mismatches.push(format!("{name}/{j}"));
            }
        }
    }
    let elapsed = t0.elapsed();
    let ok = fixtures.len() >= 25 && mismatches.is_empty() && elapsed.as_secs_f64() < 30.0;
    verdict(
        2,
        "raster oracle",
        ok,
        elapsed,
        &format!("{} graphs, {views} views at 64x64, mismatches {mismatches:?}", fixtures.len()),
    );
}

fn split_tally(rows: impl IntoIterator<Item = Split>) -> [usize; 3] {
    let mut c = [0; 3];
    for s in rows {
        c[Split::ALL.iter().position(|&x| x == s).unwrap()] += 1;
    }
    c
}

#[test]
fn c03_protocol_counts() {
    let _g = serial();
    let t0 = Instant::now();
    let test_ids: Vec<String> = (0..504).map(|i| format!("test_{i:05}")).collect();
    let plan = benchmark_plan(&test_ids, &RunConfig::default());
    let distinct: BTreeSet<(&str, &str)> = plan.iter().map(|v| (v.shape_id.as_str(), v.view_id.as_str())).collect();

    let ids: Vec<String> = (0..10_076).map(|i| format!("shape_{i:05}")).collect();
    let lib = split_tally(assign_splits(&ids, &DEFAULT_RATIOS, 7).unwrap().into_iter().map(|(_, s)| s));

    let dir = tempfile::tempdir().unwrap();
    let list = dir.path().join("ids.txt");
    std::fs::write(&list, ids.join("\n")).unwrap();
    let csv = dir.path().join("split.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_wiredepth"))
        .args(["split", "--ratios", "0.9,0.05,0.05", "--seed", "7", "--shapes"])
        .arg(&list)
        .arg("--out")
        .arg(&csv)
        .output()
        .unwrap()
        .status;
    let assigned = read_split_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    let cli = split_tally(assigned.values().copied());

    let elapsed = t0.elapsed();
    let ok = plan.len() == 2016
        && distinct.len() == 2016
        && lib == [9068, 504, 504]
        && status.success()
        && assigned.len() == 10_076
        && cli == [9068, 504, 504]
        && elapsed.as_secs_f64() < 10.0;
    verdict(
        3,
        "benchmark protocol counts",
        ok,
        elapsed,
        &format!("{} viewpoints; split library {lib:?}, command line {cli:?}", plan.len()),
    );
}

#[test]
fn c04_metrics_oracle() {
    let _g = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = 16 * 16;
        let gt: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.05) { rng.gen_range(0.0..1e-4) } else { rng.gen_range(0.0..1.0) })
            .collect();
        let pred: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.03) { 0.0 } else { rng.gen_range(0.0..1.0) })
            .collect();
        let mut valid: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
        valid[0] = true;
        let mut gt = gt;
        gt[0] = 0.5;
        let r = evaluate(&pred, &gt, &valid).unwrap();
        let (mae, nmae, absrel, delta) = brute_metrics(&pred, &gt, &valid);
        for (a, b) in [(r.mae, mae), (r.nmae, nmae), (r.absrel, absrel), (r.delta_125, delta)] {
            worst = worst.max((a - b).abs());
        }
    }

    let gt: Vec<f64> = (0..256).map(|i| 0.05 + 0.9 * i as f64 / 255.0).collect();
    let valid = vec![true; 256];
    let perfect = evaluate(&gt, &gt, &valid).unwrap();
    let perfect_ok = (perfect.mae, perfect.nmae, perfect.absrel, perfect.delta_125) == (0.0, 0.0, 0.0, 1.0);

    let groups: Vec<Vec<_>> = (0..20)
        .map(|s| {
            let pred: Vec<f64> = gt.iter().map(|g| g + 0.01 * ((s * 7 + 3) % 11) as f64).collect();
            vec![evaluate(&pred, &gt, &valid).unwrap()]
        })
        .collect();
    let avg = aggregate(&groups, AggregationMode::Average).unwrap();
    let best = aggregate(&groups, AggregationMode::Best).unwrap();
    let k1_ok = avg.per_sample == best.per_sample
        && avg.nmae == best.nmae
        && avg.absrel == best.absrel
        && avg.delta_125 == best.delta_125;

    let elapsed = t0.elapsed();
    let ok = worst <= 1e-12 && perfect_ok && k1_ok && elapsed.as_secs_f64() < 10.0;
    verdict(
        4,
        "metrics oracle",
        ok,
        elapsed,
        &format!("max deviation {worst:.1e} over 100 fixtures; perfect {perfect_ok}; K=1 average==best {k1_ok}"),
    );
}

/// Number of connected pieces formed by `edges`.
fn pieces(g: &WireframeGraph, edges: &[usize]) -> usize {
    let set: BTreeSet<usize> = edges.iter().copied().collect();
    let adj = build_adjacency(g);
    let mut seen = BTreeSet::new();
    let mut count = 0;
    for &start in &set {
        if !seen.insert(start) {
            continue;
        }
        count += 1;
        let mut stack = vec![start];
        while let Some(e) = stack.pop() {
            for &v in &g.edges()[e].endpoints {
                for &f in adj.incident(v) {
                    if set.contains(&f) && seen.insert(f) {
                        stack.push(f);
                    }
                }
            }
        }
    }
    count
}

#[test]
fn c05_bfs_masking() {
    let _g = serial();
    let t0 = Instant::now();
    let cfg = DisparityConfig::default();
    let shapes_under_test = [
        unit(shapes::unit_cube()),
        unit(shapes::tetrahedron()),
        unit(shapes::triangular_prism()),
        unit(shapes::l_bracket()),
        unit(shapes::cylinder(0.5, 1.0, 24)),
        unit(common::star(7)),
    ];
    let ks: Vec<f64> = (1..20).map(|i| i as f64 * 0.05).collect();
    let mut failures = Vec::new();
    let mut checks = 0;
    for (si, g) in shapes_under_test.iter().enumerate() {
        for cam in sample_hemisphere_views(3, 50 + si as u64, 1.05, 96) {
            let bundle = rasterize(g, &cam, 1.5, &cfg).unwrap();
            let fg = bundle.foreground() as f64;
            let largest = bundle
                .edge_pixels(g.edges().len())
                .iter()
                .map(|p| p.len() as f64 / fg)
                .fold(0.0, f64::max);
            let components = pieces(g, &(0..g.edges().len()).collect::<Vec<_>>());
            for seed in 0..10 {
                let mut previous: Vec<usize> = Vec::new();
                for &k in &ks {
                    let p = bfs_partial_mask(&bundle, g, k, seed).unwrap();
                    checks += 1;
                    if p.coverage < k {
                        failures.push(format!("shape {si} seed {seed} k {k:.2}: coverage {:.4}", p.coverage));
                    }
                    if p.coverage - k > largest + 1e-12 {
                        failures.push(format!("shape {si} seed {seed} k {k:.2}: overshoot {:.4}", p.coverage - k));
                    }
                    // one connected run per BFS start; none needed for a connected graph
                    let runs = pieces(g, &p.revealed);
                    if runs > p.restarts + 1 || (components == 1 && p.restarts != 0) {
                        failures.push(format!("shape {si} seed {seed} k {k:.2}: {runs} runs, {} restarts", p.restarts));
                    }
                    if !p.revealed.starts_with(&previous) {
                        failures.push(format!("shape {si} seed {seed} k {k:.2}: not nested"));
                    }
                    previous = p.revealed;
                }
            }
        }
    }
    let g = &shapes_under_test[0];
    let bundle = rasterize(g, &OrthoCamera::looking(Vec3::new(0.6, 0.5, 0.62), 1.05, 64, 64).unwrap(), 1.5, &cfg).unwrap();
    let draws = 10_000;
    let empty = (0..draws)
        .filter(|&s| sample_training_condition(&bundle, g, derive(9, &[s])).revealed.is_empty())
        .count();
    let rate = empty as f64 / draws as f64;

    let elapsed = t0.elapsed();
    let ok = failures.is_empty() && (rate - 0.5).abs() <= 0.015 && elapsed.as_secs_f64() < 60.0;
    verdict(
        5,
        "BFS masking",
        ok,
        elapsed,
        &format!(
            "{checks} reveals, failures {:?}; empty rate {rate:.4} over {draws}",
            &failures[..failures.len().min(5)]
        ),
    );
}

fn overfit_pair() -> (TrainingPair, Grid<bool>) {
    let g = unit(shapes::unit_cube());
    let cam = OrthoCamera::looking(Vec3::new(0.7, 0.45, 0.55), 1.05, 16, 16).unwrap();
    let bundle = rasterize(&g, &cam, 0.5, &DisparityConfig::default()).unwrap();
    let pair = TrainingPair::new(bundle.disparity.values.clone(), ConditionTensor::sketch_only(bundle.mask.clone()))
        .unwrap();
    (pair, bundle.mask)
}

#[test]
fn c06_diffusion_math() {
    let _g = serial();
    let t0 = Instant::now();

    // forward marginals
    let schedule = DiffusionSchedule::default();
    let z0 = [0.3];
    let n = 1000;
    let mut marginal_bad = Vec::new();
    for t in [1, 20, 60, 120, 200] {
        let ab = schedule.alpha_bar(t);
        let xs: Vec<f64> = (0..n)
            .map(|s| forward_noise(&z0, t, &schedule, derive(t as u64, &[s])).unwrap().0[0])
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        let (mu, sigma) = (ab.sqrt() * z0[0], (1.0 - ab).sqrt());
        let se_mean = sigma / (n as f64).sqrt();
        let se_sd = sigma / (2.0 * (n as f64 - 1.0)).sqrt();
        if (mean - mu).abs() > 3.0 * se_mean || (sd - sigma).abs() > 3.0 * se_sd {
            marginal_bad.push((t, mean, mu, sd, sigma));
        }
    }

    // analytic gradient against central differences
    let config = DenoiserConfig::global(4, 4, &[2], &[6]).with_output(OutputParam::Sample);
    let mut net = TinyDenoiser::new(config, 11).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let batch: Vec<TrainingPair> = (0..3)
        .map(|_| {
            let target = Grid::from_fn(4, 4, |_, _| rng.gen_range(0.0..1.0));
            let sketch = Grid::from_fn(4, 4, |_, _| rng.gen_bool(0.5));
            TrainingPair::new(target, ConditionTensor::sketch_only(sketch)).unwrap()
        })
        .collect();
    let (_, grad) = ldm_loss(&batch, &net, &schedule, 5).unwrap();
    let h = 1e-5;
    let mut worst_rel: f64 = 0.0;
    for i in (0..net.param_count()).step_by(3) {
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let up = ldm_loss_value(&batch, &net, &schedule, 5).unwrap();
        net.params_mut()[i] = orig - h;
        let down = ldm_loss_value(&batch, &net, &schedule, 5).unwrap();
        net.params_mut()[i] = orig;
        let fd = (up - down) / (2.0 * h);
        let scale = grad[i].abs().max(fd.abs()).max(1e-3);
        worst_rel = worst_rel.max((grad[i] - fd).abs() / scale);
    }

    // overfit a single sample
    let (pair, sketch) = overfit_pair();
    let od_schedule = DiffusionSchedule::scaled_linear(100).unwrap();
    let mut od = TinyDenoiser::new(DenoiserConfig::global(16, 16, &[], &[64]).with_output(OutputParam::Sample), 3).unwrap();
    let train = TrainConfig {
        steps: 1500,
        batch: 8,
        learning_rate: 5e-2,
        clip_norm: Some(5.0),
        seed: 4,
    };
    train_denoiser(&mut od, &vec![pair.clone(); 8], &od_schedule, &train).unwrap();
    let samples = sample_many(&od, &od_schedule, &pair.cond, 5, 9, 1).unwrap();
    let everywhere = vec![true; 256];
    let worst_mae = samples
        .iter()
        .map(|s| {
            let all = brute_metrics(s.as_slice(), pair.target.as_slice(), &everywhere).0;
            let strokes = brute_metrics(s.as_slice(), pair.target.as_slice(), sketch.as_slice()).0;
            all.max(strokes)
        })
        .fold(0.0, f64::max);

    let elapsed = t0.elapsed();
    let ok = marginal_bad.is_empty() && worst_rel <= 1e-4 && worst_mae < 0.05 && elapsed.as_secs_f64() < 300.0;
    verdict(
        6,
        "diffusion math",
        ok,
        elapsed,
        &format!(
            "marginals off {marginal_bad:?}; gradient rel err {worst_rel:.1e}; overfit MAE {worst_mae:.4}"
        ),
    );
}

fn masked_mae(a: &[f64], b: &[f64], mask: &[bool]) -> f64 {
    let mut s = 0.0;
    let mut n = 0.0;
    for i in 0..a.len() {
        if mask[i] {
            s += (a[i] - b[i]).abs();
            n += 1.0;
        }
    }
    s / n
}

#[test]
fn c07_multimodality() {
    let _g = serial();
    let t0 = Instant::now();
    let cfg = TwoModeConfig::default();
    let fx = necker_fixture(cfg.resolution, false).unwrap();
    let sketch = fx.sketch.as_slice();
    let mean: Vec<f64> = fx.y_a.as_slice().iter().zip(fx.y_b.as_slice()).map(|(a, b)| 0.5 * (a + b)).collect();

    // the squared-error optimum for two equally likely targets is their mean
    let free = ConditionTensor::sketch_only(fx.sketch.clone());
    let reg_data = [
        TrainingPair::new(fx.y_a.clone(), free.clone()).unwrap(),
        TrainingPair::new(fx.y_b.clone(), free.clone()).unwrap(),
    ];
    let mut regressor = TinyDenoiser::new(cfg.denoiser.clone(), derive(cfg.seed, &[1])).unwrap();
    train_regressor(&mut regressor, &reg_data, &cfg.regressor).unwrap();
    let reg_out = regress(&regressor, &free);
    let reg_to_mean = masked_mae(&reg_out, &mean, sketch);

    // the exact two-point denoiser through the same sampler
    let schedule = DiffusionSchedule::scaled_linear(cfg.schedule_steps).unwrap();
    let exact = TwoPointDenoiser::new(&fx.y_a, &fx.y_b);
    let exact_samples = sample_many(&exact, &schedule, &free, 100, 77, 1).unwrap();
    let exact_near = exact_samples
        .iter()
        .filter(|s| {
            masked_mae(s.as_slice(), fx.y_a.as_slice(), sketch).min(masked_mae(s.as_slice(), fx.y_b.as_slice(), sketch))
                <= cfg.tau
        })
        .count();

    let report = two_mode_experiment(&cfg).unwrap();
    let elapsed = t0.elapsed();
    let ok = reg_to_mean < 0.02
        && (report.regressor_to_mean - reg_to_mean).abs() < 1e-12
        && exact_near >= 80
        && report.free.fraction_near_mode() >= 0.8
        && report.anchored.fraction_a() >= 0.95
        && elapsed.as_secs_f64() < 900.0;
    verdict(
        7,
        "multimodality",
        ok,
        elapsed,
        &format!(
            "regressor MAE to mean {reg_to_mean:.4} (mode gap {:.3}); exact denoiser near a mode {exact_near}/100; \
             free samples near a mode {:.2} (A {} / B {}); anchored on A {:.2} at coverage {:.2}",
            2.0 * report.mode_to_mean,
            report.free.fraction_near_mode(),
            report.free.near_a,
            report.free.near_b,
            report.anchored.fraction_a(),
            report.anchored_coverage
        ),
    );
}

#[test]
fn c08_round_trip_reconstruction() {
    let _g = serial();
    let t0 = Instant::now();
    let fixtures = [
        ("cube", unit(shapes::unit_cube())),
        ("tetrahedron", unit(shapes::tetrahedron())),
        ("prism", unit(shapes::triangular_prism())),
        ("l_bracket", unit(shapes::l_bracket())),
        ("two_triangles", unit(shapes::two_triangles())),
        ("random_lines", unit(shapes::random_lines(1, 6, 6))),
    ];
    let radius = 1.5;
    let cfg = DisparityConfig::default();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut cube_edges = Vec::new();
    let mut views = 0;
    for (i, (name, g)) in fixtures.iter().enumerate() {
        let generic: Vec<OrthoCamera> = sample_hemisphere_views(400, 800 + i as u64, 1.05, 256)
            .into_iter()
            .filter(|c| ViewClearance::measure(g, c).at_least(20.0, 20.0))
            .take(4)
            .collect();
        assert_eq!(generic.len(), 4, "{name}: too few generic views");
        for cam in &generic {
            views += 1;
            let bundle = rasterize(g, cam, radius, &cfg).unwrap();
            let cloud = backproject(&bundle.mask, &bundle.disparity.values, cam, &cfg).unwrap();
            let topo = extract_topology(&bundle.mask, &TopologyConfig::for_stroke_radius(radius));
            let fit = fit_wireframe(&topo, &cloud, cam, &FitConfig::for_stroke_radius(radius)).unwrap();
            let truth: Vec<Vec3> = g.vertices().iter().map(|v| v.position).collect();
            let found: Vec<Vec3> = fit.graph.vertices().iter().map(|v| v.position).collect();
            let h = hausdorff(&truth, &found) / cam.footprint();
            worst = worst.max(h);
            if h >= 3.0 {
                failures.push(format!("{name} view {:?}: {h:.2} px", cam.view()));
            }
            if *name == "cube" {
                cube_edges.push(fit.graph.edges().len());
            }
        }
    }
    let elapsed = t0.elapsed();
    let ok = failures.is_empty() && cube_edges.iter().all(|&n| n == 12) && elapsed.as_secs_f64() < 60.0;
    verdict(
        8,
        "round-trip reconstruction",
        ok,
        elapsed,
        &format!("{views} views, worst Hausdorff {worst:.2} px, cube edges {cube_edges:?}, failures {failures:?}"),
    );
}

#[test]
fn c09_apr_and_complexity() {
    let _g = serial();
    let t0 = Instant::now();
    let cfg = DisparityConfig::default();
    let apr_cfg = AprConfig::default();

    let segment = WireframeGraph::new(
        vec![Vec3::new(-0.7, 0.1, -0.3), Vec3::new(0.6, -0.2, 0.5)],
        vec![wiredepth::wireframe::EdgeSpec::line(0, 1)],
    )
    .unwrap();
    let single_max = sample_hemisphere_views(20, 3, 1.05, 64)
        .iter()
        .map(|c| score(&rasterize(&segment, c, 1.5, &cfg).unwrap(), &segment, &apr_cfg).apr)
        .fold(0.0, f64::max);

    // Both segments pass through the image centre (32, 32). Pixel centres sit
    // at i + 0.5, so columns 30..=33 lie within 1.5 px of the vertical stroke
    // and rows 30..=33 within 1.5 px of the horizontal one: a 4 x 4 overlap.
    let crossing = common::crossing_segments();
    let front = OrthoCamera::looking(Vec3::new(0.0, 1.0, 0.0), 1.0, 64, 64).unwrap();
    let bundle = rasterize(&crossing, &front, 1.5, &cfg).unwrap();
    let flags = accidental_pixels(&bundle, &crossing, &apr_cfg);
    let counted = flags.iter().filter(|&&a| a).count();
    let expected: BTreeSet<usize> = (30..34).flat_map(|y| (30..34).map(move |x| y * 64 + x)).collect();
    let flagged: BTreeSet<usize> = flags.iter().enumerate().filter(|(_, &a)| a).map(|(i, _)| i).collect();
    let crossing_apr = score(&bundle, &crossing, &apr_cfg).apr;
    let crossing_ok = counted == 16 && flagged == expected && crossing_apr == 16.0 / bundle.foreground() as f64;

    let cube = unit(shapes::unit_cube());
    let cylinder = unit(shapes::cylinder(0.5, 1.0, 32));
    let reports: Vec<_> = sample_hemisphere_views(100, 9, 1.05, 128)
        .iter()
        .map(|c| score(&rasterize(&cube, c, 1.5, &cfg).unwrap(), &cube, &apr_cfg))
        .collect();
    let complexities: BTreeSet<u64> = reports.iter().map(|r| r.curve_complexity).collect();
    let aprs: Vec<f64> = reports.iter().map(|r| r.apr).collect();
    let apr_lo = aprs.iter().copied().fold(f64::INFINITY, f64::min);
    let apr_hi = aprs.iter().copied().fold(0.0, f64::max);

    let elapsed = t0.elapsed();
    let ok = single_max == 0.0
        && crossing_ok
        && curve_complexity(&cube) == 12
        && curve_complexity(&cylinder) == 8
        && complexities == BTreeSet::from([12])
        && apr_hi > apr_lo
        && elapsed.as_secs_f64() < 30.0;
    verdict(
        9,
        "APR and complexity",
        ok,
        elapsed,
        &format!(
            "single segment max APR {single_max}; crossing {counted} accidental pixels (expected 16); cube {} cylinder {}; \
             cube complexity over 100 views {complexities:?}, APR {apr_lo:.4}..{apr_hi:.4}",
            curve_complexity(&cube),
            curve_complexity(&cylinder)
        ),
    );
}

fn generate(shapes_dir: &Path, out: &Path, jobs: usize) -> (Vec<(String, Vec<u8>)>, Duration) {
    let cfg = RunConfig {
        resolution: 128,
        views: 8,
        partial: PartialPolicy::Training,
        output_root: out.to_path_buf(),
        jobs,
        seed: 5,
        ..Default::default()
    };
    std::fs::create_dir_all(out).unwrap();
    let t0 = Instant::now();
    let summary = cmd_dataset(&cfg, shapes_dir, None).unwrap();
    let elapsed = t0.elapsed();
    assert_eq!(summary.shapes, 50);
    (common::tree_bytes(out), elapsed)
}

#[test]
fn c10_determinism_and_throughput() {
    let _g = serial();
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let shapes_dir = dir.path().join("shapes");
    common::write_corpus(&shapes_dir, 50);

    let (first, t1) = generate(&shapes_dir, &dir.path().join("a"), 1);
    let (second, _) = generate(&shapes_dir, &dir.path().join("b"), 1);
    let (eight, t8) = generate(&shapes_dir, &dir.path().join("c"), 8);
    let repeat_same = first == second;
    let workers_same = first == eight;
    let speedup = t1.as_secs_f64() / t8.as_secs_f64();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());

    let elapsed = t0.elapsed();
    let ok = repeat_same && workers_same && speedup >= 0.7 * 8.0 && elapsed.as_secs_f64() < 300.0;
    verdict(
        10,
        "determinism and throughput",
        ok,
        elapsed,
        &format!(
            "{} files; identical across runs {repeat_same}, across 1 and 8 workers {workers_same}; \
             speedup at 8 workers {speedup:.2}x (need 5.6x, {cores} cores available)",
            first.len()
        ),
    );
}
