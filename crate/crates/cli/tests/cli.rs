use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const P4_TREE: &str = r#"{"n": 4, "edges": [[1, 2], [2, 3], [3, 4]]}"#;
const P4_SPECTRUM: &str = r#"{"lambda": [-2, -1, 1, 2], "mu": [-1.5, 0, 1.5]}"#;
const H_TREE: &str = "10\n1 2\n2 5\n5 8\n1 3\n3 6\n6 9\n6 10\n1 4\n4 7\n";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_skew-siep"));
    c.env_remove("SKEW_SIEP_LOG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&o.stderr)))
}

fn construct_p4(dir: &TempDir) -> PathBuf {
    let tree = write(dir, "tree.json", P4_TREE);
    let spec = write(dir, "spec.json", P4_SPECTRUM);
    let out = dir.path().join("A.json");
    let o = run(&["construct", "--tree", s(&tree), "--vertex", "4", "--spectrum", s(&spec), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn construct_p4_fixture() {
    let dir = TempDir::new().unwrap();
    let out = construct_p4(&dir);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["n"], 4);
    let m = &v["matrix"];
    let golden = [1.206045, 0.8918826, 1.658312];
    for k in 0..3 {
        let x = m[k][k + 1].as_f64().unwrap();
        assert!((x - golden[k]).abs() < 1e-5);
        assert_eq!(m[k + 1][k].as_f64().unwrap(), -x);
    }
    assert_eq!(v["edges"], serde_json::json!([[1, 2], [2, 3], [3, 4]]));
    assert_eq!(v["report"]["verification"]["passed"], true);
    assert_eq!(v["report"]["trace"]["vertex"], 4);
}

#[test]
fn construct_csv() {
    let dir = TempDir::new().unwrap();
    let tree = write(&dir, "tree.json", P4_TREE);
    let spec = write(&dir, "spec.json", P4_SPECTRUM);
    let o = run(&["construct", "--tree", s(&tree), "--vertex", "4", "--spectrum", s(&spec), "--format", "csv"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    assert!((rows[2][3] - 1.658312).abs() < 1e-5);
}

#[test]
fn neb_check_h_names_failing_branch() {
    let dir = TempDir::new().unwrap();
    let tree = write(&dir, "h.txt", H_TREE);
    let o = run(&["neb-check", "--tree", s(&tree), "--vertex", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let d = stderr_json(&o);
    assert_eq!(d["error"], "not_neb");
    assert_eq!(d["detail"]["witness"]["failing_branch"], 3);
    assert_eq!(d["detail"]["witness"]["chain"], serde_json::json!([1, 3, 6]));
    let stdout: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stdout["neb"], false);
}

#[test]
fn neb_check_all_vertices_and_spanning() {
    let dir = TempDir::new().unwrap();
    let tree = write(&dir, "tree.json", P4_TREE);
    let o = run(&["neb-check", "--tree", s(&tree)]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["vertices"].as_array().unwrap().len(), 4);
    let c4 = write(&dir, "c4.txt", "1 2 2 3 3 4 4 1");
    let o = run(&["neb-check", "--tree", s(&c4), "--spanning"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["found"], true);
    let star = write(&dir, "star.txt", "1 2 1 3 1 4");
    let o = run(&["neb-check", "--tree", s(&star), "--spanning"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_spectrum_is_rejected_with_diagnostic() {
    let dir = TempDir::new().unwrap();
    let tree = write(&dir, "tree.json", P4_TREE);
    let spec = write(&dir, "spec.json", r#"{"lambda": [-2, -1, 1, 2], "mu": [-1.5, 0.2, 1.5]}"#);
    let o = run(&["construct", "--tree", s(&tree), "--vertex", "4", "--spectrum", s(&spec)]);
    assert_eq!(o.status.code(), Some(1));
    let d = stderr_json(&o);
    assert_eq!(d["error"], "invalid_spectrum");
    assert_eq!(d["detail"]["check"], "symmetry");
    assert_eq!(d["detail"]["name"], "mu_2");
}

#[test]
fn io_failures_exit_3() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "spec.json", P4_SPECTRUM);
    let missing = dir.path().join("missing.json");
    let o = run(&["construct", "--tree", s(&missing), "--vertex", "1", "--spectrum", s(&spec)]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "io");
    let bad = write(&dir, "bad.json", "{not json");
    let o = run(&["construct", "--tree", s(&bad), "--vertex", "1", "--spectrum", s(&spec)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn extend_verify_and_jacobian() {
    let dir = TempDir::new().unwrap();
    let a = construct_p4(&dir);
    let tree = dir.path().join("tree.json");
    let spec = dir.path().join("spec.json");

    let o = run(&["jacobian", "--matrix", s(&a), "--tree", s(&tree), "--vertex", "4"]);
    assert!(o.status.success());
    let j: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((j["abs_det"].as_f64().unwrap() - 4.9053).abs() < 1e-3);
    assert_eq!(j["nonsingular"], true);

    let o = run(&["verify", "--matrix", s(&a), "--tree", s(&tree), "--vertex", "4", "--spectrum", s(&spec)]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["duarte"], true);

    let ahat = dir.path().join("Ahat.json");
    let o = run(&[
        "extend", "--matrix", s(&a), "--tree", s(&tree), "--vertex", "4", "--chords", "[[4,1]]", "--epsilon", "0.1",
        "--steps", "10", "--out", s(&ahat),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let e: Value = serde_json::from_str(&std::fs::read_to_string(&ahat).unwrap()).unwrap();
    let m = &e["matrix"];
    let golden = [1.257633, 0.8175322, 1.655294];
    for k in 0..3 {
        assert!((m[k][k + 1].as_f64().unwrap() - golden[k]).abs() < 1e-5);
    }
    assert_eq!(m[3][0], 0.1);
    assert_eq!(e["report"]["passed"], true);

    let o = run(&["verify", "--matrix", s(&ahat), "--vertex", "4", "--spectrum", s(&spec)]);
    assert!(o.status.success());
}

#[test]
fn fuzz_is_deterministic_and_clean() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = run(&["fuzz", "--n-max", "9", "--trials", "200", "--seed", "42", "--out", s(p)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let r: Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(r["trials"], 200);
    assert_eq!(r["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn exhaustive_small_table() {
    let o = run(&["fuzz", "--n-max", "4", "--exhaustive"]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    let shapes = r["shapes"].as_array().unwrap();
    let at = |n: u64| -> Vec<&Value> { shapes.iter().filter(|s| s["n"] == n).collect() };
    assert_eq!(at(4).len(), 2);
    let p3 = at(3)[0];
    let verdicts: Vec<bool> = p3["neb"].as_array().unwrap().iter().map(|x| x.as_bool().unwrap()).collect();
    assert_eq!(verdicts.iter().filter(|&&x| x).count(), 2);
    for s in at(4) {
        let neb: Vec<bool> = s["neb"].as_array().unwrap().iter().map(|x| x.as_bool().unwrap()).collect();
        let degrees: Vec<usize> = (1..=4)
            .map(|v| s["edges"].as_array().unwrap().iter().filter(|e| e[0] == v || e[1] == v).count())
            .collect();
        if degrees.contains(&3) {
            assert!(neb.iter().all(|x| !x), "star");
        } else {
            assert!(neb.iter().all(|&x| x), "path");
        }
    }
}

#[test]
fn bad_vertex_is_a_domain_rejection() {
    let dir = TempDir::new().unwrap();
    let tree = write(&dir, "tree.json", P4_TREE);
    let o = run(&["neb-check", "--tree", s(&tree), "--vertex", "9"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "invalid_vertex");
}
