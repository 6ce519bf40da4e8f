//! Binary-level contracts: exit codes, flag validation, output formats,
//! corpus determinism and the frozen golden scene.

use std::fs;
use std::path::Path;
use std::process::Command;

use markerfind_core::geometry::Homography;
use markerfind_core::pnm::{load_pnm, save_pgm, PnmImage};
use markerfind_core::render::render_chessboard;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_markerfind"))
}

fn write_blank_pgm(path: &Path, w: u32, h: u32, value: u8) {
    let img = markerfind_core::image::GrayImage::filled(w, h, value);
    fs::write(path, save_pgm(&img)).unwrap();
}

/// Emit a small registry into `dir` and return the manifest path.
fn make_registry(dir: &Path, count: usize) -> std::path::PathBuf {
    let status = bin()
        .args([
            "synth",
            "--out-dir",
            dir.to_str().unwrap(),
            "--emit-registry",
            &count.to_string(),
            "--seed",
            "1",
            "--distractors",
            "0",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    dir.join("registry.json")
}

#[test]
fn detect_blank_frame_exits_zero_with_empty_list() {
    let dir = tempfile::tempdir().unwrap();
    let registry = make_registry(dir.path(), 2);
    let frame = dir.path().join("blank.pgm");
    write_blank_pgm(&frame, 120, 90, 200);
    let out = bin()
        .args([
            "detect",
            "--image",
            frame.to_str().unwrap(),
            "--registry",
            registry.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["detections"].as_array().unwrap().len(), 0);
}

#[test]
fn missing_inputs_and_bad_flags_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let registry = make_registry(dir.path(), 2);
    let frame = dir.path().join("blank.pgm");
    write_blank_pgm(&frame, 64, 64, 128);

    let missing = bin()
        .args([
            "detect",
            "--image",
            dir.path().join("nope.pgm").to_str().unwrap(),
            "--registry",
            registry.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(!missing.stderr.is_empty());

    let bad_threshold = bin()
        .args([
            "detect",
            "--image",
            frame.to_str().unwrap(),
            "--registry",
            registry.to_str().unwrap(),
            "--threshold",
            "sometimes",
        ])
        .output()
        .unwrap();
    assert_eq!(bad_threshold.status.code(), Some(2));

    let unknown_flag = bin()
        .args(["detect", "--imagine", "x.pgm"])
        .output()
        .unwrap();
    assert_eq!(unknown_flag.status.code(), Some(2));

    let size_mismatch = bin()
        .args([
            "detect",
            "--image",
            frame.to_str().unwrap(),
            "--registry",
            registry.to_str().unwrap(),
            "--pattern-size",
            "64",
        ])
        .output()
        .unwrap();
    assert_eq!(size_mismatch.status.code(), Some(2));

    let empty_corpus = bin()
        .args([
            "bench",
            "--corpus",
            dir.path().join("void").to_str().unwrap(),
            "--registry",
            registry.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(empty_corpus.status.code(), Some(2));
}

#[test]
fn chessboard_not_found_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("blank.pgm");
    write_blank_pgm(&frame, 200, 160, 190);
    let out = bin()
        .args([
            "chessboard",
            "--image",
            frame.to_str().unwrap(),
            "--board",
            "7x5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn chessboard_reports_corners_and_edge_indices() {
    let dir = tempfile::tempdir().unwrap();
    let h = Homography::from_matrix([[40.0, 0.0, 60.0], [0.0, 40.0, 55.0], [0.0, 0.0, 1.0]])
        .unwrap();
    let (img, truth) = render_chessboard(460, 360, 7, 5, &h, 185).unwrap();
    let frame = dir.path().join("board.pgm");
    fs::write(&frame, save_pgm(&img)).unwrap();

    let out = bin()
        .args([
            "chessboard",
            "--image",
            frame.to_str().unwrap(),
            "--board",
            "7x5",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let corners = json["corners"].as_array().unwrap();
    assert_eq!(corners.len(), 35);
    assert_eq!(
        json["outer_indices"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .collect::<Vec<_>>(),
        vec![0, 6, 28, 34]
    );
    for (got, want) in corners.iter().zip(truth.iter()) {
        let gx = got[0].as_f64().unwrap();
        let gy = got[1].as_f64().unwrap();
        let d = ((gx - want.x).powi(2) + (gy - want.y).powi(2)).sqrt();
        assert!(d < 1.0, "corner ({}, {}) vs {:?}", gx, gy, want);
    }
}

#[test]
fn synth_is_deterministic_per_seed_and_verifies() {
    let run = |dir: &Path| {
        let status = bin()
            .args([
                "synth",
                "--out-dir",
                dir.to_str().unwrap(),
                "--emit-registry",
                "4",
                "--random",
                "3",
                "--distractors",
                "1",
                "--seed",
                "11",
                "--verify",
            ])
            .status()
            .unwrap();
        assert!(status.success());
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(a.path());
    run(b.path());
    for name in [
        "frame_000.pgm",
        "frame_001.pgm",
        "frame_002.pgm",
        "distract_000.pgm",
        "ground_truth.json",
        "registry.json",
        "pattern_000.pgm",
    ] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{} differs between identically seeded runs", name);
    }
}

#[test]
fn mf_threads_env_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "synth",
            "--out-dir",
            dir.path().to_str().unwrap(),
            "--emit-registry",
            "2",
            "--random",
            "2",
            "--seed",
            "4",
            "--verify",
        ])
        .env("MF_THREADS", "1")
        .status()
        .unwrap();
    assert!(status.success());

    let bad = bin()
        .args([
            "synth",
            "--out-dir",
            dir.path().to_str().unwrap(),
            "--emit-registry",
            "2",
            "--random",
            "1",
            "--seed",
            "4",
            "--verify",
        ])
        .env("MF_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn annotate_output_parses_as_p6() {
    let dir = tempfile::tempdir().unwrap();
    let registry = make_registry(dir.path(), 2);
    let frame = dir.path().join("blank.pgm");
    write_blank_pgm(&frame, 100, 70, 210);
    let annotated = dir.path().join("out.ppm");
    let status = bin()
        .args([
            "detect",
            "--image",
            frame.to_str().unwrap(),
            "--registry",
            registry.to_str().unwrap(),
            "--annotate",
            annotated.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let bytes = fs::read(&annotated).unwrap();
    match load_pnm(&bytes).unwrap() {
        PnmImage::Color(c) => assert_eq!((c.width(), c.height()), (100, 70)),
        _ => panic!("annotation must be a P6 file"),
    }
}

/// The frozen golden scene: renderer, detector JSON and annotation must
/// reproduce the stored bytes exactly.
#[test]
fn golden_scene_round_trip_is_bit_exact() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "synth",
            "--out-dir",
            dir.path().to_str().unwrap(),
            "--emit-registry",
            "4",
            "--seed",
            "42",
            "--scene",
            golden.join("scene.json").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let frame = fs::read(dir.path().join("frame_000.pgm")).unwrap();
    let expected_frame = fs::read(golden.join("frame_000.pgm")).unwrap();
    assert_eq!(frame, expected_frame, "rendered frame drifted");

    let out_json = dir.path().join("detect.json");
    let out_ppm = dir.path().join("annotate.ppm");
    let status = bin()
        .current_dir(dir.path())
        .args([
            "detect",
            "--image",
            "frame_000.pgm",
            "--registry",
            "registry.json",
            "--out",
            out_json.to_str().unwrap(),
            "--annotate",
            out_ppm.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let json = fs::read(&out_json).unwrap();
    let expected_json = fs::read(golden.join("detect.json")).unwrap();
    assert_eq!(json, expected_json, "detection JSON drifted");

    let ppm = fs::read(&out_ppm).unwrap();
    let expected_ppm = fs::read(golden.join("annotate.ppm")).unwrap();
    assert_eq!(ppm, expected_ppm, "annotated PPM drifted");
}
