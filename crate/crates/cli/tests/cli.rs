use std::path::PathBuf;
use std::process::{Command, Output};

fn fracsob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracsob")).args(args).output().unwrap()
}

fn scratch_dir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("fracsob-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn exterior_cusp_fails_as_expected() {
    let dir = scratch_dir("ahlfors");
    let out = fracsob(&["ahlfors", "--domain", "cusp-exterior:2", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("cusp-exterior:2/witness: tip"), "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["records"]["summary"]["verdict"], "fail");
    for f in ["ahlfors.csv", "ahlfors.svg", "timing.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
}

#[test]
fn unknown_domain_is_an_error_naming_the_field() {
    let out = fracsob(&["bbm-sweep", "--domain", "blob"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`domain`"));
}

#[test]
fn bad_config_reports_its_line() {
    let dir = scratch_dir("bad");
    let cfg = dir.join("bad.json");
    std::fs::write(&cfg, "{\n  \"kind\": \"ahlfors\",\n  \"domian\": \"disk\"\n}\n").unwrap();
    let out = fracsob(&["report", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("domian") && err.contains("line 3"), "{err}");
}

#[test]
fn unexpected_verdict_exits_with_two() {
    let dir = scratch_dir("mismatch");
    let cfg = dir.join("disk.json");
    std::fs::write(
        &cfg,
        r#"{"kind": "ahlfors", "domain": "disk", "radii": [1.0, 0.1], "x_samples": 16, "expect": {"disk/ahlfors": "fail"}}"#,
    )
    .unwrap();
    let out = fracsob(&["report", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("MISS disk/ahlfors"));
    assert!(dir.join("disk").join("report.json").exists());
}

#[test]
fn report_files_are_reproducible() {
    let dir = scratch_dir("repeat");
    let cfg = dir.join("sweep.json");
    std::fs::write(&cfg, r#"{"kind": "bbm-sweep", "domain": "interval", "h": 0.0078125, "s": [0.5, 0.75, 0.9]}"#).unwrap();
    let mut seen = Vec::new();
    for run in ["a", "b"] {
        let out = fracsob(&["report", cfg.to_str().unwrap(), "--out", dir.join(run).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let d = dir.join(run).join("sweep");
        seen.push((std::fs::read(d.join("report.json")).unwrap(), std::fs::read(d.join("bbm-coord_1-p2.csv")).unwrap()));
    }
    assert_eq!(seen[0], seen[1]);
}

#[test]
fn seminorm_and_whitney_print_json() {
    let out = fracsob(&["seminorm", "--domain", "interval", "--s", "0.5", "--h", "0.00390625"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 0.01);

    let dir = scratch_dir("whitney");
    let out = fracsob(&["whitney", "--domain", "square", "--level", "7", "--out", dir.to_str().unwrap()]);
    // The upper half of the sampled property-(3) band fails for the dyadic
    // cover, and the exit status reports it.
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["property3"]["pass"], false);
    assert_eq!(v["property3"]["lower_violations"], 0);
    let csv = std::fs::read_to_string(dir.join("whitney.csv")).unwrap();
    assert_eq!(csv.lines().count(), v["cubes"].as_u64().unwrap() as usize + 1);
}
