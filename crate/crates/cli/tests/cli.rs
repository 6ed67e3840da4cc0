use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn grushin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grushin"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("GRUSHIN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cone_apex_is_certified_unreachable() {
    let dir = TempDir::new().unwrap();
    let o = grushin(&["certify", "--preset", "cone-ex54", "--target", "0,0"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cert = json(&dir.path().join("certificate.json"));
    assert_eq!(cert["verdict"], "unreachable");
    assert!(!dir.path().join("_FAILED").exists());
}

#[test]
fn band_boundary_point_is_certified_reachable() {
    let dir = TempDir::new().unwrap();
    let o = grushin(&["certify", "--preset", "band-ex53", "--target", "0,0"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&dir.path().join("certificate.json"))["verdict"], "reachable");
}

#[test]
fn value_writes_grid() {
    let dir = TempDir::new().unwrap();
    let o = grushin(&["value", "--preset", "band-ex53", "--nx", "16", "--nt", "16"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("u_grid.csv")).unwrap();
    assert!(csv.lines().count() > 16 * 16);
}

#[test]
fn mfg_writes_diagnostics_and_is_deterministic() {
    let run = || {
        let dir = TempDir::new().unwrap();
        let o = grushin(
            &["mfg", "--preset", "band-ex53", "--iters", "8", "--nx", "12", "--nt", "12", "--seed", "3"],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let d = json(&dir.path().join("diagnostics.json"));
        // initial profile plus one entry per iteration
        assert_eq!(d["exploitability"].as_array().unwrap().len(), 9);
        assert!(d["aborted"].is_null());
        let read = |f: &str| std::fs::read(dir.path().join(f)).unwrap();
        (read("mu_atoms.csv"), read("m_path.csv"), read("u_grid.csv"))
    };
    assert!(run() == run(), "same seed must give byte-identical outputs");
}

#[test]
fn configuration_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let o = grushin(&["value", "--preset", "no-such-preset"], dir.path());
    assert_eq!(code(&o), 2);

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "preset = \"band-ex53\"\nbogus_key = 1\n").unwrap();
    let o = grushin(&["value", "-c", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus_key"));

    let cfg = dir.path().join("noset.toml");
    std::fs::write(&cfg, "nu = 1.0\nhorizon = 1.0\n").unwrap();
    let o = grushin(&["value", "-c", cfg.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("set"));
}

#[test]
fn failed_probe_exits_one_and_leaves_marker() {
    let dir = TempDir::new().unwrap();
    let o = grushin(
        &["reach", "connect", "--preset", "cone-ex54", "--source", "0.5,0.75", "--target", "0,0"],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
    assert!(dir.path().join("_FAILED").exists());

    // a later success clears the marker
    let o = grushin(&["reach", "sequence", "--preset", "band-ex53", "--target", "0,0"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("_FAILED").exists());
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_grushin"))
        .args(["preset", "rectangle"])
        .env("GRUSHIN_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("preset.toml").exists());
}

#[test]
fn exported_preset_loads_back_as_config() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&grushin(&["preset", "cone-halfplane-ex56"], dir.path())), 0);
    let cfg = dir.path().join("preset.toml");
    let o = grushin(&["value", "-c", cfg.to_str().unwrap(), "--nx", "8", "--nt", "8"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn preset_listing_names_every_example() {
    let dir = TempDir::new().unwrap();
    let o = grushin(&["preset"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for name in grushin_core::presets::PRESET_NAMES {
        assert!(text.contains(name), "{name} missing");
    }
}
