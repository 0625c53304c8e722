mod common;

use std::path::Path;
use std::process::{Command, Output};

use wiredepth::depth::read_mask_file;
use wiredepth::pipeline::read_manifest;
use wiredepth::{shapes, WireframeGraph};

fn wiredepth(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wiredepth"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env_remove("WIREDEPTH_OUTPUT")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_shape(path: &Path, g: &WireframeGraph) {
    std::fs::write(path, g.to_wirejson()).unwrap();
}

#[test]
fn render_mask_score_eval_fit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_shape(&d.join("cube.json"), &common::unit(shapes::unit_cube()));

    ok(&wiredepth(&["render", "--shape", "cube.json", "--view", "0.71,0.43,0.56", "--out", "r"], d));
    for f in ["mask.png", "depth.png", "depth.json", "camera.json"] {
        assert!(d.join("r").join(f).exists(), "{f} missing");
    }
    let mask = read_mask_file(&d.join("r/mask.png")).unwrap();
    assert_eq!((mask.width(), mask.height()), (256, 256));

    let text = ok(&wiredepth(
        &["mask", "--shape", "cube.json", "--camera", "r/camera.json", "--k", "0.3", "--out", "m"],
        d,
    ));
    assert!(text.starts_with("revealed "), "{text}");
    let partial = read_mask_file(&d.join("m/partialmask.png")).unwrap();
    assert!(partial.count() > 0 && partial.count() < mask.count());
    assert!(partial.as_slice().iter().zip(mask.as_slice()).all(|(p, m)| !p || *m));

    let text = ok(&wiredepth(&["score", "--shape", "cube.json", "--camera", "r/camera.json"], d));
    let report: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert_eq!(report["curve_complexity"], 12);
    assert_eq!(report["foreground"], mask.count());

    let text = ok(&wiredepth(
        &["eval", "--gt", "r/depth.png", "--mask", "r/mask.png", "--pred", "r/depth.png", "--pred", "m/partial.png"],
        d,
    ));
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["draws"].as_array().unwrap().len(), 2);
    assert_eq!(report["best"]["nmae"], 0.0);
    assert_eq!(report["best"]["delta_125"], 1.0);
    assert!(report["average"]["nmae"].as_f64().unwrap() > 0.0);

    let text = ok(&wiredepth(
        &["fit", "--depth", "r/depth.png", "--mask", "r/mask.png", "--camera", "r/camera.json", "--out", "f"],
        d,
    ));
    assert!(text.contains("12 edges"), "{text}");
    let fitted = WireframeGraph::from_wirejson(&std::fs::read_to_string(d.join("f/fitted.json")).unwrap()).unwrap();
    assert_eq!(fitted.edges().len(), 12);
    assert!(std::fs::read_to_string(d.join("f/cloud.ply")).unwrap().starts_with("ply\n"));
}

#[test]
fn dataset_split_and_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    common::write_corpus(&d.join("shapes"), 6);

    ok(&wiredepth(&["split", "--shapes", "shapes", "--ratios", "0.5,0.25,0.25", "--out", "split.csv"], d));
    let csv = std::fs::read_to_string(d.join("split.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);

    let text = ok(&wiredepth(
        &[
            "dataset", "--shapes", "shapes", "--split-file", "split.csv", "--views", "3", "--resolution", "64",
            "--out", "data",
        ],
        d,
    ));
    assert!(text.starts_with("18 entries from 6 shapes"), "{text}");
    let entries = read_manifest(&d.join("data/manifest.jsonl")).unwrap();
    assert_eq!(entries.len(), 18);
    for e in &entries {
        assert!(d.join("data").join(&e.mask).exists());
        assert!(d.join("data").join(&e.depth).exists());
        assert!(e.mask.starts_with(e.split.as_str()));
    }

    let text = ok(&wiredepth(
        &[
            "benchmark", "--shapes", "shapes", "--predictions", "preds", "--baseline", "--draws", "2",
            "--resolution", "64", "--out", "bench",
        ],
        d,
    ));
    assert!(text.starts_with("24 viewpoints, 24 evaluated"), "{text}");
    assert!(d.join("bench/table.csv").exists());
    assert!(d.join("bench/stratified.csv").exists());
}

#[test]
fn diffuse_train_and_sample() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = ok(&wiredepth(
        &[
            "diffuse", "train", "--necker", "--model", "net.bin", "--steps", "20", "--hidden", "16", "--batch", "4",
            "--schedule-steps", "30",
        ],
        d,
    ));
    assert!(text.starts_with("loss "), "{text}");

    write_shape(&d.join("cube.json"), &common::unit(shapes::unit_cube()));
    ok(&wiredepth(
        &["render", "--shape", "cube.json", "--view", "0.7,0.45,0.55", "--resolution", "16", "--out", "r"],
        d,
    ));
    let text = ok(&wiredepth(
        &["diffuse", "sample", "--model", "net.bin", "--mask", "r/mask.png", "--draws", "3", "--out", "s"],
        d,
    ));
    assert!(text.starts_with("wrote 3 samples"), "{text}");

    // a model trained at 16x16 cannot sample a 256x256 sketch
    ok(&wiredepth(&["render", "--shape", "cube.json", "--view", "0.7,0.45,0.55", "--out", "big"], d));
    let out = wiredepth(&["diffuse", "sample", "--model", "net.bin", "--mask", "big/mask.png", "--out", "s2"], d);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = wiredepth(&["render", "--shape", "missing.json", "--view", "0,0,1"], d);
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(d.join("broken.json"), "{\"vertices\": [").unwrap();
    let out = wiredepth(&["render", "--shape", "broken.json", "--view", "0,0,1"], d);
    assert_eq!(out.status.code(), Some(2));

    write_shape(&d.join("cube.json"), &common::unit(shapes::unit_cube()));
    ok(&wiredepth(&["render", "--shape", "cube.json", "--view", "0.7,0.45,0.55", "--resolution", "32", "--out", "r"], d));
    std::fs::write(d.join("camera.json"), "not json").unwrap();
    let out = wiredepth(
        &["fit", "--depth", "r/depth.png", "--mask", "r/mask.png", "--camera", "camera.json", "--out", "f"],
        d,
    );
    assert_eq!(out.status.code(), Some(2));

    let out = wiredepth(&["mask", "--shape", "cube.json", "--camera", "r/camera.json", "--k", "1.5"], d);
    assert_eq!(out.status.code(), Some(1));

    let out = wiredepth(&["split", "--shapes", "cube.json", "--ratios", "0.5,0.5,0.5"], d);
    assert_eq!(out.status.code(), Some(1));
}
