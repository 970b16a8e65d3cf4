use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_valence");

fn valence(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const FIXTURE: &str = "\
# four prizes, a deal after the second open
EPISODE fx
PRIZES 1000 5000 100000 25000000
OPEN 1 25000000
OPEN 2 1000
OFFER 2 40000
DEAL 2
OPEN 3 100000
END
";

#[test]
fn label_reproduces_hand_computed_rows() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("fx.dond"), FIXTURE).unwrap();
    let out = valence(&["label", "--episodes", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // Sum 25_106_000 over 4 prizes; delta 75_000 pence.
    // 25_000_000 + delta >= 6_276_500: bad.
    // 1_000 + delta >= 35_333.3: bad.
    // After the deal, 100_000 + delta >= 52_500 is bad, flipped to good.
    let expected = "\
episode,round,removed,mean_before,mean_after,deal,label
fx,1,25000000,25106000/4,106000/3,+1,-1
fx,2,1000,106000/3,105000/2,+1,-1
fx,3,100000,105000/2,5000/1,-1,+1
";
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn label_of_empty_directory_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = valence(&["label", "--episodes", path(dir.path())]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 1);
}

#[test]
fn malformed_episode_exits_two_with_located_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let bad = FIXTURE.replace("OPEN 3 100000", "OPEN 3 1000");
    fs::write(dir.path().join("bad.dond"), bad).unwrap();
    let out = valence(&["label", "--episodes", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("bad.dond:8:"), "{stderr}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(valence(&[]).status.code(), Some(1));
    assert_eq!(valence(&["simulate", "--episodes", "x", "--out", "o"]).status.code(), Some(1));
    assert_eq!(valence(&["train-eval", "--out", "o"]).status.code(), Some(1));
    assert_eq!(valence(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[simulator]\nboard = [1]\n").unwrap();
    let out = valence(&["simulate", "--config", path(&cfg), "--out", path(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = valence(&["train-eval", "--dataset", path(&dir.path().join("missing")), "--out", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_episodes_writes_only_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sim");
    assert!(valence(&["simulate", "--episodes", "0", "--out", path(&out_dir)]).status.success());
    let names: Vec<_> = fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, ["manifest.json"]);
}

#[test]
fn simulate_matches_generate_episodes_and_labels_them() {
    let dir = tempfile::tempdir().unwrap();
    let (sim, gen) = (dir.path().join("sim"), dir.path().join("gen"));
    assert!(valence(&["simulate", "--seed", "9", "--episodes", "6", "--out", path(&sim)]).status.success());
    assert!(valence(&["generate", "--seed", "9", "--episodes", "6", "--out", path(&gen)]).status.success());
    for i in 0..6 {
        let name = format!("ep{i:05}.dond");
        assert_eq!(fs::read(sim.join(&name)).unwrap(), fs::read(gen.join("episodes").join(&name)).unwrap());
    }
    let out = valence(&["label", "--episodes", path(&sim)]);
    assert!(out.status.success());
    let rows = String::from_utf8(out.stdout).unwrap().lines().count() - 1;
    let tracks = fs::read_to_string(gen.join("tracks.txt")).unwrap().lines().count() - 1;
    assert_eq!(rows, tracks);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(sim.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["simulator"]["seed"], 9);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 6);
}
