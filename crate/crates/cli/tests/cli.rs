mod common;

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Command, Stdio};

use common::{path_str, png_size, sefa, sefa_ok};
use sefa_core::factorizer::load_directions;

fn make_toy(dir: &std::path::Path, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join("toy");
    let mut args = vec!["make-toy", "--out", path_str(&out), "--size", "64"];
    args.extend_from_slice(extra);
    sefa_ok(&args);
    out
}

#[test]
fn factorize_toy_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let toy = make_toy(dir.path(), &[]);
    let out = dir.path().join("dirs.zip");
    let run = sefa_ok(&[
        "factorize",
        "--manifest",
        path_str(&toy.join("manifest.json")),
        "--layers",
        "0-",
        "--k",
        "5",
        "--out",
        path_str(&out),
    ]);
    let ds = load_directions(&out).unwrap();
    assert_eq!(ds.k(), 5);
    assert_eq!(ds.latent_dim(), 16);
    assert!(ds.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
    assert_eq!(ds.source().layers, "0-");

    let stdout = String::from_utf8(run.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 6);
    assert!(stdout.lines().next().unwrap().contains("eigenvalue"));
    // Default toy has rank 4, so the fifth direction is near zero energy.
    let stderr = String::from_utf8(run.stderr).unwrap();
    assert!(stderr.contains("warning: 1 near-zero"), "{stderr}");
}

#[test]
fn factorize_within_rank_does_not_warn() {
    let dir = tempfile::tempdir().unwrap();
    let toy = make_toy(dir.path(), &[]);
    let out = dir.path().join("dirs.zip");
    let run = sefa_ok(&[
        "factorize",
        "--manifest",
        path_str(&toy.join("manifest.json")),
        "--k",
        "4",
        "--out",
        path_str(&out),
    ]);
    assert!(!String::from_utf8(run.stderr).unwrap().contains("warning"));
}

#[test]
fn default_k_is_capped_by_latent_dim() {
    let dir = tempfile::tempdir().unwrap();
    let toy = make_toy(dir.path(), &["--d", "8", "--m", "12", "--sigma", "3,2,1"]);
    let out = dir.path().join("dirs.zip");
    sefa_ok(&["factorize", "--manifest", path_str(&toy.join("manifest.json")), "--out", path_str(&out)]);
    assert_eq!(load_directions(&out).unwrap().k(), 8);
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let toy = make_toy(dir.path(), &[]);
    let manifest = toy.join("manifest.json");
    let out = dir.path().join("d.zip");
    let cases: Vec<Vec<&str>> = vec![
        vec!["factorize", "--manifest", path_str(&manifest), "--layers", "9-3", "--out", path_str(&out)],
        vec!["factorize", "--manifest", path_str(&manifest), "--layers", "0-2,1-3", "--out", path_str(&out)],
        vec!["factorize", "--manifest", path_str(&manifest), "--layers", "x", "--out", path_str(&out)],
        vec!["factorize", "--manifest", path_str(&manifest), "--k", "0", "--out", path_str(&out)],
        vec!["factorize", "--manifest", path_str(&manifest)],
        vec!["factorize", "--manifest", path_str(&manifest), "--out", path_str(&out), "--frobnicate"],
        vec!["make-toy", "--out", path_str(&out), "--sigma", "2,x"],
        vec!["sweep", "--gen", "g", "--directions", "d", "--steps", "1", "--out", "o"],
        vec!["no-such-command"],
        vec![],
    ];
    for args in cases {
        let run = sefa(&args);
        assert_eq!(run.status.code(), Some(2), "{args:?}");
        assert!(!run.stderr.is_empty());
    }
    assert!(!out.exists());
    let inverted = sefa(&["factorize", "--manifest", path_str(&manifest), "--layers", "9-3", "--out", path_str(&out)]);
    assert!(String::from_utf8_lossy(&inverted.stderr).contains("9-3"));
}

#[test]
fn runtime_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let toy = make_toy(dir.path(), &[]);
    let manifest = toy.join("manifest.json");
    let out = dir.path().join("d.zip");
    let missing = dir.path().join("missing.json");
    let cases: Vec<Vec<&str>> = vec![
        vec!["factorize", "--manifest", path_str(&missing), "--out", path_str(&out)],
        vec!["factorize", "--manifest", path_str(&manifest), "--layers", "3-", "--out", path_str(&out)],
        vec!["factorize", "--manifest", path_str(&manifest), "--k", "17", "--out", path_str(&out)],
        vec!["make-toy", "--out", path_str(&out), "--sigma", "1,2"],
        vec!["make-toy", "--out", path_str(&out), "--r", "3"],
        vec!["make-toy", "--out", path_str(&out), "--m", "5"],
    ];
    for args in cases {
        let run = sefa(&args);
        assert_eq!(run.status.code(), Some(1), "{args:?}");
        let stderr = String::from_utf8(run.stderr).unwrap();
        assert!(stderr.starts_with("error: "), "{stderr}");
    }
    let run = sefa(&["factorize", "--manifest", path_str(&missing), "--out", path_str(&out)]);
    let stderr = String::from_utf8(run.stderr).unwrap();
    assert!(stderr.contains("missing.json") && stderr.contains("No such file"), "{stderr}");
}

#[test]
fn stylegan_levels_give_distinct_direction_sets() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, _) = common::stylegan_manifest(dir.path(), 64, 64, 3);
    let mut sets = Vec::new();
    for sel in ["0-1", "2-5", "6-"] {
        let out = dir.path().join(format!("{sel}.zip"));
        sefa_ok(&["factorize", "--manifest", path_str(&manifest), "--layers", sel, "--k", "5", "--out", path_str(&out)]);
        let ds = load_directions(&out).unwrap();
        assert_eq!(ds.source().layers, sel);
        sets.push(ds);
    }
    for i in 0..3 {
        for j in i + 1..3 {
            assert_ne!(sets[i].directions(), sets[j].directions());
            assert!(sets[i].direction(0).dot(sets[j].direction(0)).abs() < 0.9);
        }
    }
}

#[test]
fn source_date_epoch_sets_creation_time() {
    let dir = tempfile::tempdir().unwrap();
    let toy = make_toy(dir.path(), &[]);
    let out = dir.path().join("d.zip");
    let status = Command::new(env!("CARGO_BIN_EXE_sefa"))
        .args(["factorize", "--manifest", path_str(&toy.join("manifest.json")), "--out", path_str(&out)])
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    assert_eq!(load_directions(&out).unwrap().source().created_unix, 1_700_000_000);
}

#[test]
fn sweep_writes_frames_and_strip() {
    let dir = tempfile::tempdir().unwrap();
    let toy = make_toy(dir.path(), &[]);
    let dirs = dir.path().join("d.zip");
    sefa_ok(&["factorize", "--manifest", path_str(&toy.join("manifest.json")), "--k", "4", "--out", path_str(&dirs)]);
    let frames = dir.path().join("frames");
    sefa_ok(&[
        "sweep", "--gen", path_str(&toy), "--directions", path_str(&dirs), "--index", "1",
        "--alpha-min", "-2", "--alpha-max", "2", "--steps", "5", "--seed", "4", "--out", path_str(&frames),
    ]);
    let mut names: Vec<String> = fs::read_dir(&frames)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["frame_000.png", "frame_001.png", "frame_002.png", "frame_003.png", "frame_004.png", "strip.png"]
    );
    assert_eq!(png_size(&fs::read(frames.join("frame_002.png")).unwrap()), (64, 64));
    assert_eq!(png_size(&fs::read(frames.join("strip.png")).unwrap()), (320, 64));
    assert_ne!(
        fs::read(frames.join("frame_000.png")).unwrap(),
        fs::read(frames.join("frame_004.png")).unwrap()
    );

    let bad = sefa(&[
        "sweep", "--gen", path_str(&toy), "--directions", path_str(&dirs), "--index", "4", "--out", path_str(&frames),
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn rescore_writes_and_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let toy = make_toy(dir.path(), &["--aligned", "--sigma", "1,0.9,0.8,0.7"]);
    let dirs = dir.path().join("d.zip");
    sefa_ok(&["factorize", "--manifest", path_str(&toy.join("manifest.json")), "--k", "4", "--out", path_str(&dirs)]);
    let csv = dir.path().join("scores.csv");
    let run = sefa_ok(&[
        "rescore", "--gen", path_str(&toy), "--directions", path_str(&dirs), "--samples", "300", "--out", path_str(&csv),
    ]);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(String::from_utf8(run.stdout).unwrap(), text);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "direction,pos_x,pos_y,rotation,log_scale,hue,brightness");
    assert_eq!(lines.len(), 5);
    // The aligned toy puts direction i on attribute i.
    for (i, line) in lines[1..].iter().enumerate() {
        let values: Vec<f64> = line.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
        let best = (0..6).max_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs())).unwrap();
        assert_eq!(best, i, "{line}");
    }
}

#[test]
fn compare_reports_similarity_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let toy = make_toy(dir.path(), &[]);
    let csv = dir.path().join("cmp.csv");
    let run = sefa_ok(&["compare", "--gen", path_str(&toy), "--k", "4", "--samples", "5000", "--out", path_str(&csv)]);
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert_eq!(stdout, fs::read_to_string(&csv).unwrap());
    assert!(stdout.starts_with("direction,abs_cosine,principal_angle\n"));
    assert_eq!(stdout.lines().count(), 5);
    let stderr = String::from_utf8(run.stderr).unwrap();
    assert!(stderr.contains("factorize: "), "{stderr}");

    let too_few = sefa(&["compare", "--gen", path_str(&toy), "--k", "4", "--samples", "4"]);
    assert_eq!(too_few.status.code(), Some(1));
}

#[test]
fn serve_answers_http() {
    let dir = tempfile::tempdir().unwrap();
    let toy = make_toy(dir.path(), &[]);
    let dirs = dir.path().join("d.zip");
    sefa_ok(&["factorize", "--manifest", path_str(&toy.join("manifest.json")), "--k", "3", "--out", path_str(&dirs)]);
    let notes = dir.path().join("notes.json");
    let mut child = Command::new(env!("CARGO_BIN_EXE_sefa"))
        .args([
            "serve", "--gen", path_str(&toy), "--directions", path_str(&dirs), "--port", "0",
            "--annotations", path_str(&notes),
        ])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on http://").expect(&line).to_string();

    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /api/meta HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();

    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    let body = &response[response.find("\r\n\r\n").unwrap() + 4..];
    let meta: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(meta["k"], 3);
}
