mod common;

use std::collections::BTreeMap;

use common::brute_metrics;
use wiredepth::depth::{code_disparity, disparity_code, read_depth_file, read_mask_file};
use wiredepth::pipeline::{
    benchmark_plan, cmd_benchmark, cmd_dataset, list_shapes, load_shape, prediction_path, read_manifest,
    write_mean_baseline, PartialPolicy, RunConfig, Split, MANIFEST_FILE,
};
use wiredepth::rasterize;

#[test]
fn manifest_matches_rendered_files() {
    let dir = tempfile::tempdir().unwrap();
    let shapes = dir.path().join("shapes");
    common::write_corpus(&shapes, 8);
    let cfg = RunConfig {
        resolution: 48,
        views: 5,
        output_root: dir.path().join("out"),
        seed: 3,
        ..Default::default()
    };
    std::fs::create_dir_all(&cfg.output_root).unwrap();
    let summary = cmd_dataset(&cfg, &shapes, None).unwrap();
    let entries = read_manifest(&cfg.output_root.join(MANIFEST_FILE)).unwrap();
    assert_eq!(entries, summary.entries);
    assert_eq!(entries.len(), 40);

    let graphs: BTreeMap<String, _> = list_shapes(&shapes)
        .unwrap()
        .into_iter()
        .map(|s| (s.id, load_shape(&s.path).unwrap()))
        .collect();
    for e in &entries {
        let bundle = rasterize(&graphs[&e.shape_id], &e.camera, cfg.stroke_radius, &cfg.disparity().unwrap()).unwrap();
        let mask = read_mask_file(&cfg.output_root.join(&e.mask)).unwrap();
        assert_eq!(mask, bundle.mask);
        let depth = read_depth_file(&cfg.output_root.join(&e.depth)).unwrap();
        for ((v, g), m) in depth
            .values
            .as_slice()
            .iter()
            .zip(bundle.disparity.values.as_slice())
            .zip(mask.as_slice())
        {
            if *m {
                assert_eq!(*v, code_disparity(disparity_code(*g)));
            }
        }
        match (&e.k, &e.partial_mask) {
            (Some(k), Some(p)) => {
                assert!((0.1..0.9).contains(k));
                let pm = read_mask_file(&cfg.output_root.join(p)).unwrap();
                assert!(pm.count() > 0);
                assert!(pm.as_slice().iter().zip(mask.as_slice()).all(|(a, b)| !a || *b));
            }
            (None, None) => assert!(e.partial.is_none()),
            _ => panic!("partial depth without its mask in {e:?}"),
        }
    }
}

#[test]
fn fixed_partial_policy_reveals_every_view() {
    let dir = tempfile::tempdir().unwrap();
    let shapes = dir.path().join("shapes");
    common::write_corpus(&shapes, 3);
    let cfg = RunConfig {
        resolution: 32,
        views: 2,
        partial: PartialPolicy::Fixed { k: 0.4 },
        output_root: dir.path().join("out"),
        ..Default::default()
    };
    std::fs::create_dir_all(&cfg.output_root).unwrap();
    let summary = cmd_dataset(&cfg, &shapes, None).unwrap();
    assert_eq!(summary.with_partial(), summary.entries.len());
    assert!(summary.entries.iter().all(|e| e.k == Some(0.4)));
}

#[test]
fn unreadable_shapes_are_skipped_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let shapes = dir.path().join("shapes");
    common::write_corpus(&shapes, 3);
    std::fs::write(shapes.join("zz_broken.json"), "[").unwrap();
    let cfg = RunConfig {
        resolution: 32,
        views: 1,
        output_root: dir.path().join("out"),
        ..Default::default()
    };
    std::fs::create_dir_all(&cfg.output_root).unwrap();
    let summary = cmd_dataset(&cfg, &shapes, None).unwrap();
    assert_eq!(summary.shapes, 3);
    assert_eq!(summary.skipped.len(), 1);
    assert!((summary.skip_fraction() - 0.25).abs() < 1e-12);
}

#[test]
fn small_shapes_are_filtered_not_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let shapes = dir.path().join("shapes");
    common::write_corpus(&shapes, 6);
    let small = list_shapes(&shapes)
        .unwrap()
        .iter()
        .filter(|s| load_shape(&s.path).unwrap().edges().len() < 10)
        .count();
    assert!(small > 0 && small < 6);
    let cfg = RunConfig {
        resolution: 32,
        views: 1,
        min_edges: 10,
        max_skip_fraction: 0.0,
        output_root: dir.path().join("out"),
        ..Default::default()
    };
    std::fs::create_dir_all(&cfg.output_root).unwrap();
    let summary = cmd_dataset(&cfg, &shapes, None).unwrap();
    assert_eq!(summary.filtered, small);
    assert_eq!(summary.shapes, 6 - small);
    assert_eq!(summary.skip_fraction(), 0.0);
}

#[test]
fn mean_baseline_benchmark_matches_direct_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let shapes = dir.path().join("shapes");
    common::write_corpus(&shapes, 5);
    let ids: Vec<String> = list_shapes(&shapes).unwrap().into_iter().map(|s| s.id).collect();
    let cfg = RunConfig {
        resolution: 64,
        ..Default::default()
    };
    let preds = dir.path().join("preds");
    let draws = 3;
    assert_eq!(write_mean_baseline(&cfg, &shapes, &ids, &preds, draws).unwrap(), 4 * ids.len() * draws);
    // drop one draw of one view: that view leaves the tables
    let gone = prediction_path(&preds, &ids[0], "iso1", 2);
    std::fs::remove_file(&gone).unwrap();

    let report = cmd_benchmark(&cfg, &shapes, &ids, &preds, draws).unwrap();
    assert_eq!(report.viewpoints, 20);
    assert_eq!(report.missing, vec![gone]);
    assert_eq!(report.evaluated.len(), 19);

    let plan = benchmark_plan(&ids, &cfg);
    let mut nmae = Vec::new();
    for (view, result) in plan.iter().filter(|v| !(v.shape_id == ids[0] && v.view_id == "iso1")).zip(&report.evaluated) {
        assert_eq!((&view.shape_id, &view.view_id), (&result.shape_id, &result.view_id));
        let g = load_shape(&shapes.join(format!("{}.json", view.shape_id))).unwrap();
        let bundle = rasterize(&g, &view.camera, cfg.stroke_radius, &cfg.disparity().unwrap()).unwrap();
        let gt: Vec<f64> = bundle
            .disparity
            .values
            .as_slice()
            .iter()
            .map(|&y| code_disparity(disparity_code(y)))
            .collect();
        for (k, r) in result.draws.iter().enumerate() {
            let pred = read_depth_file(&prediction_path(&preds, &view.shape_id, &view.view_id, k)).unwrap();
            let (mae, n, absrel, delta) = brute_metrics(pred.values.as_slice(), &gt, bundle.mask.as_slice());
            assert!((r.mae - mae).abs() < 1e-12);
            assert!((r.nmae - n).abs() < 1e-12);
            assert!((r.absrel - absrel).abs() < 1e-12);
            assert!((r.delta_125 - delta).abs() < 1e-12);
        }
        nmae.push(result.draws[0].nmae);
    }
    let mean = nmae.iter().sum::<f64>() / nmae.len() as f64;
    assert!((report.average.nmae.mean - mean).abs() < 1e-12);
    // identical draws make the two reductions agree
    for (a, b) in report.average.per_sample.iter().zip(&report.best.per_sample) {
        assert!((a.nmae - b.nmae).abs() < 1e-15 && (a.absrel - b.absrel).abs() < 1e-15);
        assert!((a.mae - b.mae).abs() < 1e-15 && (a.delta_125 - b.delta_125).abs() < 1e-15);
    }
    assert!(report.evaluated.iter().all(|r| r.complexity.curve_complexity > 0));
}

#[test]
fn splits_are_deterministic_with_exact_counts() {
    let ids: Vec<String> = (0..200).map(|i| format!("id{i}")).collect();
    let before = wiredepth::pipeline::assign_splits(&ids, &[0.8, 0.1, 0.1], 1).unwrap();
    let again = wiredepth::pipeline::assign_splits(&ids, &[0.8, 0.1, 0.1], 1).unwrap();
    assert_eq!(before, again);
    let counts = |rows: &[(String, Split)]| Split::ALL.map(|s| rows.iter().filter(|r| r.1 == s).count());
    assert_eq!(counts(&before), [160, 20, 20]);
}
