use std::path::Path;
use std::process::{Command, Output};

fn simon(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simon"))
        .args(args)
        .current_dir(dir)
        .env("SIMON_OUT_DIR", dir.join("out"))
        .output()
        .expect("spawn simon")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn oracle_writes_json_and_dot() {
    let tmp = tempfile::tempdir().unwrap();
    let o = simon(tmp.path(), &["oracle", "--n", "5", "--hw", "4"]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("7 gates, entangling depth 2"));
    let json = std::fs::read_to_string(tmp.path().join("out/oracle_n5_hw4.json")).unwrap();
    serde_json::from_str::<serde_json::Value>(&json).unwrap();
    assert!(tmp.path().join("out/oracle_n5_hw4.dot").exists());
}

#[test]
fn bad_sizes_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(simon(tmp.path(), &["oracle", "--n", "0", "--hw", "0"]).status.code(), Some(2));
    assert_eq!(simon(tmp.path(), &["oracle", "--n", "3", "--hw", "4"]).status.code(), Some(2));
    assert_eq!(simon(tmp.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn compile_fits_and_refuses() {
    let tmp = tempfile::tempdir().unwrap();
    let o = simon(tmp.path(), &["compile", "--n", "60", "--w", "3", "--device", "grid:10x12"]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("120 qubits used, swap-free: true"));
    for f in ["embedding", "certificate", "timed", "idle"] {
        assert!(tmp.path().join(format!("out/compile_n60_w3_{f}.json")).exists());
    }
    let o = simon(tmp.path(), &["compile", "--n", "70", "--w", "3", "--device", "grid:10x12"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn nts_closed_form_and_no_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let o = simon(tmp.path(), &["nts", "--n", "3", "--w", "2", "--q", "1,1", "--p", "0.5,0.3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("NTS = 3.571429"));
    let o = simon(tmp.path(), &["nts", "--n", "3", "--w", "2", "--q", "1,1", "--p", "0.01,0.01"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn simulate_is_reproducible_and_feeds_the_rest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("cfg.toml"), "n = 4\nshots_per_class = 400\nseed = 7\n").unwrap();
    let a = simon(dir, &["simulate", "--config", "cfg.toml", "--out", "a.jsonl"]);
    let b = simon(dir, &["simulate", "--config", "cfg.toml", "--out", "b.jsonl"]);
    assert!(a.status.success() && b.status.success(), "{a:?}");
    let shots = std::fs::read(dir.join("a.jsonl")).unwrap();
    assert_eq!(shots, std::fs::read(dir.join("b.jsonl")).unwrap());

    let f = simon(dir, &["estimate-f", "--shots", "a.jsonl", "--n", "4", "--w", "3", "--out", "f.json"]);
    assert!(f.status.success(), "{f:?}");
    let p = simon(dir, &["play", "--n", "4", "--w", "3", "--shots", "a.jsonl", "--fhat", "f.json", "--out", "g.json"]);
    assert!(p.status.success(), "{p:?}");
    let g: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("g.json")).unwrap()).unwrap();
    assert!(g["nts"].as_f64().unwrap() > 1.0);

    let r = simon(dir, &["reduce", "--shots", "a.jsonl", "--m", "3", "--out", "r.jsonl"]);
    assert!(r.status.success(), "{r:?}");

    let an = simon(dir, &["analyze", "--shots", "a.jsonl", "--resamples", "100", "--out", "an"]);
    assert!(an.status.success(), "{an:?}");
    let csv = std::fs::read_to_string(dir.join("an/nts_table.csv")).unwrap();
    assert!(csv.lines().count() > 1);
    assert!(dir.join("an/availability.json").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("cfg.toml"), "n = 4\nbogus = 1\n").unwrap();
    let o = simon(tmp.path(), &["simulate", "--config", "cfg.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn monte_carlo_play_refuses_coin_flip_fhat() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("f.json"), r#"{"1": 0.5, "2": 0.5}"#).unwrap();
    let o = simon(tmp.path(), &["play", "--n", "4", "--w", "2", "--fhat", "f.json", "--rounds", "100"]);
    assert_eq!(o.status.code(), Some(3), "{o:?}");
}
