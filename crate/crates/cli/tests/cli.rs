use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn brw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brw"))
        .args(args)
        .env_remove("BRW_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

const TAIL: &str = r#"
kind = "tail"
[params]
n = 16
theta = 0
[tail]
t = 0.5
x = [0.0, 0.5]
reps = 2000
compare_exact = true
"#;

#[test]
fn verify_small_sweep_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = brw(&["verify", "--exact", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert_eq!(s["passed"], true);
    for c in s["checks"].as_array().unwrap() {
        assert!(c.get("tolerance").is_some() && c.get("target_source").is_some());
    }
    let csv = fs::read_to_string(out.join("fk_identity.csv")).unwrap();
    assert!(csv.starts_with("m,k,x,y,z,lhs,rhs_i,rhs_ii,max_diff"));
}

#[test]
fn tail_at_origin_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tail.toml", TAIL);
    let out = dir.path().join("t");
    let o = brw(&["run", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let mut rdr = csv::Reader::from_path(out.join("tail.csv")).unwrap();
    let first = rdr.records().next().unwrap().unwrap();
    assert_eq!(first[1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(first[4].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn missing_seed_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tail.toml", TAIL);
    let o = brw(&["run", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let diag: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(diag["field"], "seed");
    assert!(diag["message"].as_str().unwrap().contains("seed"));
}

#[test]
fn unknown_keys_and_bad_tables_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "kind = \"tail\"\nsede = 1\n");
    assert_eq!(brw(&["run", "--config", &cfg]).status.code(), Some(2));
    let o = brw(&[
        "table",
        "--kind",
        "critical_tail",
        "--n-list",
        "400,100",
        "--x-list",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_sweeps_are_resource_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = brw(&["verify", "--m-max", "40", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn same_seed_gives_identical_files_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tail.toml", &format!("seed = 11\n{TAIL}"));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(
        brw(&["run", "--config", &cfg, "--threads", "1", "--out", a.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let o = Command::new(env!("CARGO_BIN_EXE_brw"))
        .args(["run", "--config", &cfg, "--out", b.to_str().unwrap()])
        .env("BRW_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    for name in ["tail.csv", "summary.json", "manifest.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    // no stray temporaries
    assert!(fs::read_dir(&a)
        .unwrap()
        .all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn critical_table_targets_six() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let o = brw(&[
        "table",
        "--kind",
        "critical_tail",
        "--n-list",
        "100,400",
        "--x-list",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(out.join("convergence.csv")).unwrap();
    for rec in rdr.records() {
        assert_eq!(rec.unwrap()[4].parse::<f64>().unwrap(), 6.0);
    }
}

#[test]
fn closed_form_table_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "table.toml",
        "[table]\nkind = \"all_time_tail\"\ntheta = -1.0\nn_list = [100, 400, 1600]\nx_list = [1.0]\n",
    );
    let out = dir.path().join("t");
    let o = brw(&["table", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(summary(&out)["passed"], true);
}

#[test]
fn pde_and_wave_runs_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "fkpp.toml",
        "kind = \"fkpp\"\n[fkpp]\ntheta = -1.0\nx_max = 4.0\ndx = 0.05\nt_max = 0.5\n",
    );
    let out = dir.path().join("p");
    assert_eq!(
        brw(&["run", "--config", &cfg, "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let header: Value = serde_json::from_str(&fs::read_to_string(out.join("fkpp_header.json")).unwrap()).unwrap();
    assert!(header["cap_history"].is_array());
    assert!(fs::read_to_string(out.join("fkpp.csv")).unwrap().starts_with("t,x,phi"));

    let cfg = write(dir.path(), "wave.toml", "kind = \"wave\"\n[wave]\nrho = 0.5\n");
    let out = dir.path().join("w");
    assert_eq!(
        brw(&["run", "--config", &cfg, "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn selftest_passes() {
    let o = brw(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn shipped_configs_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        let verb = if stem == "table" { "table" } else { "run" };
        let out = dir.path().join(&stem);
        let o = brw(&[verb, "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        // exit 1 is a failed embedded check, which is a result rather than a crash
        assert!(
            matches!(o.status.code(), Some(0) | Some(1)),
            "{stem}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(out.join("summary.json").exists(), "{stem}");
        assert!(out.join("manifest.json").exists(), "{stem}");
    }
}
