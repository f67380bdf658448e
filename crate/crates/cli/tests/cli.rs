use std::path::Path;
use std::process::{Command, Output};

use weldwave::dataset::{read_manifest, WfsRecord};
use weldwave::wavefield::Provenance;

fn run(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_weldwave")).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn dispersion_csv_lists_a0_and_s0() {
    let out = run(&["dispersion", "--freq-khz", "225"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2, "{text}");
    assert!(rows.iter().any(|r| r.starts_with("A,0,")) && rows.iter().any(|r| r.starts_with("S,0,")));
}

#[test]
fn bad_arguments_fail_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_weldwave"))
        .args(["dispersion", "--freq-khz", "-5"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn simulate_filter_corrupt_plot_and_info() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let sample = d.join("em.wfs");
    run(&["simulate-em", "--seed", "4", "--grid", "64", "--out", s(&sample)]);
    let rec = WfsRecord::read(&sample).unwrap();
    assert_eq!((rec.nx, rec.ny, rec.channels.len()), (64, 64, 9));
    assert!(rec.labels.is_some());

    let info = run(&["info", s(&sample)]);
    let v: serde_json::Value = serde_json::from_slice(&info.stdout).unwrap();
    assert_eq!(v["sha256"].as_str().unwrap().len(), 64);

    let filtered = d.join("a0.wfs");
    run(&["filter", "--in", s(&sample), "--mode", "A0", "--out", s(&filtered)]);
    let f = WfsRecord::read(&filtered).unwrap();
    assert_eq!(f.channels.len(), 2);
    assert!(f.labels.is_none());

    let noisy = d.join("noisy.wfs");
    run(&["corrupt", "--in", s(&filtered), "--seed", "2", "--out", s(&noisy)]);
    let n = WfsRecord::read(&noisy).unwrap();
    assert_ne!(n.channels, f.channels);
    let again = d.join("noisy2.wfs");
    run(&["corrupt", "--in", s(&filtered), "--seed", "2", "--out", s(&again)]);
    assert_eq!(std::fs::read(&noisy).unwrap(), std::fs::read(&again).unwrap());

    let pgm = d.join("crack.pgm");
    run(&["export-plot", s(&sample), "--channel", "crack", "--out", s(&pgm)]);
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n64 64\n255\n"));
    assert_eq!(bytes.len(), b"P5\n64 64\n255\n".len() + 64 * 64);
}

#[test]
fn import_scan_with_crop() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (nx, ny) = (32, 64);
    let raw = |f: fn(usize) -> f32| -> Vec<u8> { (0..nx * ny).flat_map(|i| f(i).to_le_bytes()).collect() };
    let (a, p, m) = (d.join("a.f32"), d.join("p.f32"), d.join("m.json"));
    std::fs::write(&a, raw(|_| 1.0)).unwrap();
    std::fs::write(&p, raw(|i| i as f32 * 0.01)).unwrap();
    let meta = serde_json::json!({"nx": nx, "ny": ny, "dx": 0.125, "dy": 0.125, "freq_hz": 250e3, "units": "in"});
    std::fs::write(&m, meta.to_string()).unwrap();
    let out = d.join("scan.wfs");
    run(&["import-scan", "--amp", s(&a), "--phase", s(&p), "--meta", s(&m), "--crop-in", "4", "4", "--out", s(&out)]);
    let r = WfsRecord::read(&out).unwrap();
    assert_eq!((r.nx, r.ny), (32, 32));
    assert_eq!(r.provenance, Provenance::Scan);
    assert!(r.labels.is_none());
}

#[test]
fn gen_dataset_writes_verifiable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    run(&["gen-dataset", "--count", "2", "--seed", "5", "--grid", "64", "--workers", "1", "--out-dir", s(&out)]);
    let m = read_manifest(&out).unwrap();
    assert_eq!(m.entries.len(), 2);
    assert!(m.failures.is_empty());
    run(&["info", s(&out)]);
}
