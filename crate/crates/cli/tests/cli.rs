use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn cvflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvflab")).args(args).env_remove("CVFLAB_SEED").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const CH2_TABLES: &str = include_str!("../../core/fixtures/ch2_lie_tables.txt");

#[test]
fn passing_commands_exit_zero() {
    for args in [
        vec!["verify-frames"],
        vec!["verify-frames", "--n", "3"],
        vec!["derive-system"],
        vec!["derive-system", "--n", "3"],
        vec!["busemann", "--model", "rh", "--n", "3"],
        vec!["busemann", "--model", "rh", "--n", "2", "--kind", "boundary", "--point", "-1/2"],
        vec!["busemann", "--model", "chn"],
        vec!["series"],
        vec!["nullspace"],
        vec!["nullspace", "--model", "rh", "--n", "2"],
    ] {
        let o = cvflab(&args);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn corrupted_table_fixture_fails_and_names_the_entry() {
    let dir = scratch("corrupt");
    let path = dir.join("tables.txt");
    std::fs::write(&path, CH2_TABLES.replace("Z    Z    A    1", "Z    Z    A    3/2")).unwrap();
    let o = cvflab(&["verify-frames", "--fixture", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["pass"], false);
    let diffs: Vec<String> = v["diffs"].as_array().unwrap().iter().map(|d| d.as_str().unwrap().to_string()).collect();
    assert_eq!(diffs.len(), 1, "{diffs:?}");
    assert!(diffs[0].contains('Z') && diffs[0].contains('A'), "{diffs:?}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&cvflab(&["series", "--M", "2"])), 2);
    assert_eq!(code(&cvflab(&["nullspace", "--model", "nosuchmodel"])), 2);
    assert_eq!(code(&cvflab(&["busemann", "--model", "rh", "--n", "3", "--point", "1"])), 2);
    assert_eq!(code(&cvflab(&["verify-frames", "--fixture", "/nonexistent/tables.txt"])), 2);
    assert_eq!(code(&cvflab(&["no-such-command"])), 2);
}

#[test]
fn json_output_is_deterministic() {
    let a = cvflab(&["nullspace", "--model", "rh", "--n", "2", "--format", "json"]);
    let b = cvflab(&["nullspace", "--model", "rh", "--n", "2", "--format", "json"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["killing"]["dimension"], 3);
    assert_eq!(v["conformal"]["dimension"], 6);
    assert_eq!(v["gap"], 3);
}

#[test]
fn seed_comes_from_environment_and_does_not_change_dimensions() {
    let run = |seed: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_cvflab"));
        c.args(["nullspace", "--format", "json"]).env_remove("CVFLAB_SEED");
        if let Some(s) = seed {
            c.env("CVFLAB_SEED", s);
        }
        json(&c.output().unwrap())
    };
    let a = run(Some("7"));
    let b = run(None);
    assert_eq!(a["seed"], 7);
    assert_ne!(b["seed"], 7);
    for mode in ["killing", "conformal", "homothetic"] {
        assert_eq!(a[mode]["dimension"], b[mode]["dimension"]);
        assert_eq!(a[mode]["dimension"], 5);
    }
}

#[test]
fn out_directory_receives_reports() {
    let dir = scratch("reports");
    let o = cvflab(&["series", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let j: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("series.json")).unwrap()).unwrap();
    assert_eq!(j["pass"], true);
    assert!(std::fs::read_to_string(dir.join("series.md")).unwrap().contains("PASS"));
}

#[test]
fn nullspace_config_file() {
    let dir = scratch("config");
    let path = dir.join("run.json");
    std::fs::write(&path, r#"{"model": "rh", "n": 3, "degree": 2, "seed": 11}"#).unwrap();
    let o = cvflab(&["nullspace", "--config", path.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["seed"], 11);
    assert_eq!(v["killing"]["dimension"], 6);
    assert_eq!(v["conformal"]["dimension"], 10);
}
