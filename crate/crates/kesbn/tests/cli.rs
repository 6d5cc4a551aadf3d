use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kesbn::report::{self, AtlasReport, ExperimentReport, FingerprintReport, InclusionReport, RunReport};
use kesbn_core::data::trap::Optimum;
use tempfile::TempDir;

fn kesbn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kesbn")).args(args).output().expect("binary runs")
}

fn kesbn_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kesbn")).args(args).env("KESBN_THREADS", threads).output().expect("binary runs")
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn trap_csv(dir: &TempDir, name: &str, groups: &str, rows: &str, seed: &str) -> PathBuf {
    let p = dir.path().join(name);
    ok(kesbn(&["trapgen", "--groups", groups, "--rows", rows, "--seed", seed, "--out", path_str(&p)]));
    p
}

const CHAIN_BN: &str = r#"{
  "variables": [{"name": "a", "states": ["0", "1"]}, {"name": "b", "states": ["lo", "hi"]}],
  "arcs": [[0, 1]],
  "cpts": [[[0.5, 0.5]], [[0.9, 0.1], [0.2, 0.8]]]
}"#;

#[test]
fn trapgen_shapes_and_determinism() {
    let dir = TempDir::new().unwrap();
    let a = trap_csv(&dir, "a.csv", "10", "20000", "5");
    let b = trap_csv(&dir, "b.csv", "10", "20000", "5");
    let text = fs::read_to_string(&a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 40);
    assert_eq!(lines.count(), 20000);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let empty = trap_csv(&dir, "e.csv", "1", "0", "5");
    assert_eq!(fs::read_to_string(empty).unwrap(), "X1,Y1,Z1,U1\n");
}

#[test]
fn sample_from_network_file() {
    let dir = TempDir::new().unwrap();
    let bn = dir.path().join("chain.json");
    fs::write(&bn, CHAIN_BN).unwrap();
    let out = ok(kesbn(&["sample", "--bn", path_str(&bn), "--rows", "10", "--seed", "1"]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert_eq!(text.lines().next(), Some("a,b"));

    let fixed = CHAIN_BN.replace("[[0.5, 0.5]]", "[[0.0, 1.0]]").replace("[0.2, 0.8]", "[0.0, 1.0]");
    fs::write(&bn, fixed).unwrap();
    let out = ok(kesbn(&["sample", "--bn", path_str(&bn), "--rows", "5"]));
    assert!(String::from_utf8(out.stdout).unwrap().lines().skip(1).all(|l| l == "1,hi"));

    fs::write(&bn, CHAIN_BN.replace("\"arcs\": [[0, 1]],", "\"arcs\": [[0, 1],")).unwrap();
    let out = kesbn(&["sample", "--bn", path_str(&bn), "--rows", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("chain.json:4:"), "{err}");
}

#[test]
fn learn_on_independent_data_returns_the_empty_model() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("a,b,c\n");
    for i in 0..4000u32 {
        // All eight combinations equally often: exactly independent.
        text.push_str(&format!("{},{},{}\n", i % 2, (i / 2) % 2, (i / 4) % 2));
    }
    let data = dir.path().join("ind.csv");
    fs::write(&data, text).unwrap();
    let out = dir.path().join("run.json");
    ok(kesbn(&["learn", "--data", path_str(&data), "--k", "1", "--out", path_str(&out)]));
    let r: RunReport = report::load(&out).unwrap();
    assert!(r.model.arcs.is_empty());
    assert_eq!(r.trajectory.len(), 1);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let data = trap_csv(&dir, "t.csv", "1", "200", "1");
    assert_eq!(kesbn(&["learn", "--data", path_str(&data), "--k", "1.5"]).status.code(), Some(2));
    assert_eq!(kesbn(&["learn"]).status.code(), Some(2));
    assert_eq!(kesbn(&["learn", "--data", "/nonexistent.csv"]).status.code(), Some(1));
    assert_eq!(kesbn(&["oracle", "--mode", "local-optima"]).status.code(), Some(2));
    assert_eq!(kesbn_env(&["experiment", "--data", path_str(&data), "--runs", "1"], "zero").status.code(), Some(2));
    let five = trap_csv(&dir, "five.csv", "2", "100", "1");
    assert_eq!(kesbn(&["oracle", "--mode", "local-optima", "--data", path_str(&five)]).status.code(), Some(1));
    assert_eq!(kesbn(&["--help"]).status.code(), Some(0));
}

#[test]
fn learn_and_experiment_are_byte_identical_across_invocations() {
    let dir = TempDir::new().unwrap();
    let data = trap_csv(&dir, "t.csv", "2", "2000", "3");
    let d = path_str(&data);
    let outs: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("learn{i}.json"))).collect();
    for o in &outs {
        ok(kesbn(&["learn", "--data", d, "--k", "0.4", "--seed", "9", "--out", path_str(o)]));
    }
    assert_eq!(fs::read(&outs[0]).unwrap(), fs::read(&outs[1]).unwrap());

    let exps: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("exp{i}.json"))).collect();
    for (o, threads) in exps.iter().zip(["1", "4"]) {
        let args =
            ["experiment", "--data", d, "--k-list", "0,0.4,1", "--runs", "6", "--seed", "2", "--out", path_str(o)];
        ok(kesbn_env(&args, threads));
    }
    assert_eq!(fs::read(&exps[0]).unwrap(), fs::read(&exps[1]).unwrap());

    let back: ExperimentReport = report::load(&exps[0]).unwrap();
    assert_eq!(report::to_json(&back), fs::read_to_string(&exps[0]).unwrap());
    for r in &back.records {
        assert_eq!(r.better + r.worse + r.equal, 6);
        assert!(r.distinct_better <= r.better && r.distinct_worse <= r.worse);
    }
}

#[test]
fn single_greedy_run_matches_itself() {
    let dir = TempDir::new().unwrap();
    let data = trap_csv(&dir, "t.csv", "1", "1000", "2");
    let out = ok(kesbn(&["experiment", "--data", path_str(&data), "--k-list", "1", "--runs", "1"]));
    let r: ExperimentReport = report::from_json(std::str::from_utf8(&out.stdout).unwrap(), "stdout").unwrap();
    assert_eq!(r.records.len(), 1);
    assert_eq!((r.records[0].better, r.records[0].worse), (0, 0));
}

#[test]
fn stochastic_runs_reach_both_trap_optima() {
    let dir = TempDir::new().unwrap();
    let data = trap_csv(&dir, "t.csv", "1", "20000", "4");
    let expected: BTreeSet<FingerprintReport> = Optimum::ALL.iter().map(|o| (&o.dag().fingerprint()).into()).collect();
    let mut found = BTreeSet::new();
    for seed in 0..200 {
        let seed = seed.to_string();
        let out = ok(kesbn(&["learn", "--data", path_str(&data), "--k", "0", "--seed", &seed]));
        let r: RunReport = report::from_json(std::str::from_utf8(&out.stdout).unwrap(), "stdout").unwrap();
        if expected.contains(&r.model.fingerprint) {
            found.insert(r.model.fingerprint);
        }
        if found.len() == expected.len() {
            break;
        }
    }
    assert_eq!(found, expected);

    let out = ok(kesbn(&["experiment", "--data", path_str(&data), "--k-list", "0,0.4,0.8,1", "--runs", "200"]));
    let r: ExperimentReport = report::from_json(std::str::from_utf8(&out.stdout).unwrap(), "stdout").unwrap();
    assert!(r.records[0].distinct_total >= 2);
}

#[test]
fn oracle_modes() {
    let dir = TempDir::new().unwrap();
    let three = dir.path().join("three.csv");
    fs::write(&three, "a,b,c\n0,0,0\n1,1,1\n0,1,0\n").unwrap();
    let out = ok(kesbn(&["oracle", "--mode", "atlas", "--data", path_str(&three)]));
    let atlas: AtlasReport = report::from_json(std::str::from_utf8(&out.stdout).unwrap(), "stdout").unwrap();
    assert_eq!(atlas.n, 3);
    assert_eq!(atlas.classes.len(), 11);
    assert_eq!(atlas.classes.iter().map(|c| c.members.len()).sum::<usize>(), 25);

    let out = ok(kesbn(&["oracle", "--mode", "inclusion-optimal"]));
    let inc: InclusionReport = report::from_json(std::str::from_utf8(&out.stdout).unwrap(), "stdout").unwrap();
    let mut dims: Vec<u128> = inc.models.iter().map(|m| m.dimension).collect();
    dims.sort_unstable();
    assert_eq!(dims, [19, 23]);

    let data = trap_csv(&dir, "t.csv", "1", "20000", "8");
    let out = ok(kesbn(&["oracle", "--mode", "local-optima", "--data", path_str(&data)]));
    let opt: report::OptimaReport = report::from_json(std::str::from_utf8(&out.stdout).unwrap(), "stdout").unwrap();
    assert_eq!(opt.classes, 185);
    let dims: Vec<u128> = opt.strict.iter().map(|m| m.model.dimension).collect();
    assert_eq!(dims, [19, 23]);
}
