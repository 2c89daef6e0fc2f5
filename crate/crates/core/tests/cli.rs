mod common;

use std::path::Path;
use std::process::{Command, Output};

fn flareforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flareforge")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_validate_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let clean = tmp.path().join("clean");
    let out = tmp.path().join("out");
    common::write_clean_plates(&clean, 2);

    let gen = flareforge(&["generate", "--variant", "MRP", "--count", "3", "--seed", "4", "--clean", s(&clean), "--out", s(&out)]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let manifest = out.join("manifest.json");

    let ok = flareforge(&["validate", s(&manifest)]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));

    // ground truth as the restoration scores perfectly everywhere
    let report = tmp.path().join("report.json");
    let ev = flareforge(&["eval", "--pairs", s(&manifest), "--restored", s(&out.join("gt")), "--report", s(&report)]);
    assert!(ev.status.success(), "{}", String::from_utf8_lossy(&ev.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    for key in ["pairs", "full", "flare_region", "ghost_region"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["pairs"].as_array().unwrap().len(), 3);
    assert_eq!(json["full"]["psnr"]["mean"].as_f64(), Some(100.0));
    assert_eq!(json["full"]["ssim"]["mean"].as_f64(), Some(1.0));

    let victim = std::fs::read_dir(out.join("masks").join("ghost")).unwrap().next().unwrap().unwrap().path();
    std::fs::remove_file(victim).unwrap();
    let bad = flareforge(&["validate", s(&manifest)]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn unknown_variant_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = flareforge(&["generate", "--variant", "XYZ", "--clean", s(tmp.path()), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn missing_manifest_is_an_error() {
    let out = flareforge(&["validate", "/nonexistent/manifest.json"]);
    assert_eq!(out.status.code(), Some(2));
}
