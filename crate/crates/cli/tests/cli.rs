use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wavefront(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavefront")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest_checksums(dir: &Path) -> Vec<(String, String)> {
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    v["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| (a["file"].as_str().unwrap().to_string(), a["sha256"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn config_error_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = wavefront(&["solve", "-s", "potential=tabulated", "-s", "table=/nonexistent.csv", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("does not exist"));
    assert!(!out.exists());

    let o = wavefront(&["solve", "-s", "no_such_key=1", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown key"));
    assert!(!out.exists());
}

#[test]
fn config_file_and_overrides_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "# fixed-speed minimization\nbeta = 0.25\nc = 0.3\nn = 1001\n").unwrap();
    let out = tmp.path().join("run");
    let o = wavefront(&["solve", "-c", cfg.to_str().unwrap(), "-s", "n=801", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("profile.csv").exists());
    let rows = fs::read_to_string(out.join("profile.csv")).unwrap().lines().count();
    assert_eq!(rows, 802);
}

#[test]
fn reruns_are_bitwise_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = wavefront(&["solve", "--seed", "3", "--workers", "1", "-o", dir.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("zero_energy_certificate = true"));
    }
    let (ca, cb) = (manifest_checksums(&a), manifest_checksums(&b));
    assert!(!ca.is_empty());
    assert_eq!(ca, cb);
}

#[test]
fn verify_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("audit");
    let o = wavefront(&["audit", "-o", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = wavefront(&["verify", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("all artifacts match"));

    fs::write(dir.join("audit.json"), "{}").unwrap();
    fs::remove_file(dir.join("constants.csv")).unwrap();
    let o = wavefront(&["verify", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.contains("checksum mismatch audit.json") && s.contains("missing constants.csv"), "{s}");
}

#[test]
fn short_pde_domain_leaves_partial_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("oracle");
    let o = wavefront(&[
        "oracle",
        "-s",
        "shooting=false",
        "-s",
        "pde_half_length=20",
        "-s",
        "pde_margin=5",
        "-o",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("domain_too_short"));
    assert!(dir.join("front_trajectory_partial.csv").exists());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(v["error"]["kind"], "domain_too_short");
}

#[test]
fn scan_finds_one_sign_change() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("scan");
    let o = wavefront(&["scan", "-s", "scan_lo=0.2", "-s", "scan_hi=0.5", "-s", "scan_points=7", "-o", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("sign_changes = 1"));
    assert_eq!(fs::read_to_string(dir.join("scan.csv")).unwrap().lines().count(), 8);
}

#[test]
fn keys_lists_defaults() {
    let o = wavefront(&["keys"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("beta = 0.25") && s.contains("c_tol = 1e-4") && s.contains("out_dir = out"), "{s}");
}
