use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn vnframes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vnframes"))
        .args(args)
        .env_remove("VNFRAMES_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, value: &Value) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, serde_json::to_vec(value).unwrap()).unwrap();
    path
}

fn read(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn translation_rep(dir: &TempDir, group: &str) -> PathBuf {
    let out = dir.path().join(format!("{group}.rep.json"));
    let o = vnframes(&["rep", "translation", "--group", group, "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn group_make_writes_a_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("d3.json");
    let o = vnframes(&["group", "make", "--kind", "dihedral", "--params", "3", "--out", s(&out)]);
    assert!(o.status.success());
    let g = read(&out);
    assert_eq!(g["order"], 6);
    assert_eq!(g["cayley"].as_array().unwrap().len(), 6);

    let rep = dir.path().join("rep.json");
    let o = vnframes(&["rep", "translation", "--group", s(&out), "--out", s(&rep)]);
    assert!(o.status.success());
    assert_eq!(read(&rep)["dim"], 6);
}

#[test]
fn frame_bounds_of_constant_translates() {
    let dir = TempDir::new().unwrap();
    let rep = translation_rep(&dir, "z2");
    let gens = write(&dir, "gens.json", &json!({"dim": 2, "vectors": [[[1.0, 0.0], [1.0, 0.0]]]}));
    let out = dir.path().join("report.json");
    let o = vnframes(&["frame-bounds", "--rep", s(&rep), "--generators", s(&gens), "--out", s(&out)]);
    assert!(o.status.success());
    let report = read(&out);
    assert_eq!(report["classification"], "frame_sequence_not_riesz");
    assert!((report["lower"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert!((report["upper"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert_eq!(report["kernel_dim"], 1);

    let o = vnframes(&["modular-bounds", "--rep", s(&rep), "--generators", s(&gens)]);
    assert!(o.status.success());
    let modular: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((modular["lower"].as_f64().unwrap() - 4.0).abs() < 1e-10);
    assert!((modular["upper"].as_f64().unwrap() - 4.0).abs() < 1e-10);
}

#[test]
fn bracket_helson_and_dual_frame_run() {
    let dir = TempDir::new().unwrap();
    let rep = translation_rep(&dir, "z3");
    let phi = write(&dir, "phi.json", &json!({"dim": 3, "entries": [[1.0, 0.0], [0.0, 1.0], [0.5, 0.0]]}));
    let o = vnframes(&["bracket", "--rep", s(&rep), "--phi", s(&phi), "--psi", s(&phi)]);
    assert!(o.status.success());
    let b: Value = serde_json::from_slice(&o.stdout).unwrap();
    // Identity coefficient of [φ,φ] is ‖φ‖².
    assert!((b["coeffs"][0][0].as_f64().unwrap() - 2.25).abs() < 1e-12);

    let gens = write(&dir, "gens.json", &json!({"dim": 3, "vectors": [[[1.0, 0.0], [0.0, 1.0], [0.5, 0.0]]]}));
    let o = vnframes(&["helson", "--rep", s(&rep), "--generators", s(&gens), "--probe", s(&phi)]);
    assert!(o.status.success());
    let img: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(img["fibers"].as_array().unwrap().len(), img["weights"].as_array().unwrap().len());

    let o = vnframes(&["dual-frame", "--rep", s(&rep), "--generators", s(&gens)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dual: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(dual["dual"].as_array().unwrap().len(), 1);
}

#[test]
fn zak_of_a_point_mass() {
    let dir = TempDir::new().unwrap();
    let action = write(
        &dir,
        "action.json",
        &json!({"group": "z2", "set_size": 2, "perm": [[0, 1], [1, 0]], "jacobian": [[1.0, 1.0], [1.0, 1.0]]}),
    );
    let tile = write(&dir, "tile.json", &json!({"tile": [0]}));
    let v = write(&dir, "v.json", &json!({"dim": 2, "entries": [[1.0, 0.0], [0.0, 0.0]]}));
    let out = dir.path().join("fibers.json");
    let o = vnframes(&["zak", "--action", s(&action), "--tile", s(&tile), "--vector", s(&v), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let img = read(&out);
    assert_eq!(img["base_points"], json!([0]));
    let coeffs = img["fibers"][0]["coeffs"].as_array().unwrap();
    let energy: f64 = coeffs
        .iter()
        .map(|c| c[0].as_f64().unwrap().powi(2) + c[1].as_f64().unwrap().powi(2))
        .sum();
    assert!((energy - 1.0).abs() < 1e-12);
}

#[test]
fn op_subcommands() {
    let dir = TempDir::new().unwrap();
    let op = write(&dir, "op.json", &json!({"group": "z2", "coeffs": [[1.0, 0.0], [1.0, 0.0]]}));
    let o = vnframes(&["op", "spectrum", "--op", s(&op)]);
    assert!(o.status.success());
    let spec: Value = serde_json::from_slice(&o.stdout).unwrap();
    let ev: Vec<f64> = spec["eigenvalues"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(ev[0].abs() < 1e-12 && (ev[1] - 2.0).abs() < 1e-12);

    let o = vnframes(&["op", "norm", "--op", s(&op), "--p", "inf"]);
    let norm: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((norm["norm"].as_f64().unwrap() - 2.0).abs() < 1e-12);

    let m = dir.path().join("m.json");
    assert!(vnframes(&["op", "matrix", "--op", s(&op), "--out", s(&m)]).status.success());
    let o = vnframes(&["op", "coeffs", "--matrix", s(&m), "--group", "z2"]);
    let back: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(back["coeffs"], json!([[1.0, 0.0], [1.0, 0.0]]));

    let bad = write(&dir, "bad.json", &json!({"group": "z2", "coeffs": [[1.0, 0.0]]}));
    assert_eq!(vnframes(&["op", "norm", "--op", s(&bad)]).status.code(), Some(2));
}

#[test]
fn rep_validate_flags_broken_matrices() {
    let dir = TempDir::new().unwrap();
    let rep = translation_rep(&dir, "z2");
    assert!(vnframes(&["rep", "validate", "--rep", s(&rep)]).status.success());

    let mut broken = read(&rep);
    broken["matrices"][1][0] = json!([0.5, 0.0]);
    let broken = write(&dir, "broken.json", &broken);
    let o = vnframes(&["rep", "validate", "--rep", s(&broken)]);
    assert_eq!(o.status.code(), Some(1));
    let diag: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(diag["valid"], false);
}

#[test]
fn rep_combinators() {
    let dir = TempDir::new().unwrap();
    let rep = translation_rep(&dir, "z3");
    let sum = dir.path().join("sum.json");
    let o = vnframes(&["rep", "direct-sum", "--rep", s(&rep), "--rep", s(&rep), "--out", s(&sum)]);
    assert!(o.status.success());
    assert_eq!(read(&sum)["dim"], 6);
    let conj = dir.path().join("conj.json");
    let o = vnframes(&["rep", "conjugate", "--rep", s(&sum), "--seed", "5", "--out", s(&conj)]);
    assert!(o.status.success());
    assert!(vnframes(&["rep", "validate", "--rep", s(&conj)]).status.success());
}

#[test]
fn verify_exit_codes_and_determinism() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = ["verify", "--groups", "z2,d3", "--suite", "bracket,main", "--trials", "1", "--seed", "7"];
    for out in [&a, &b] {
        let mut full = args.to_vec();
        full.extend(["--out", s(out)]);
        assert!(vnframes(&full).status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let report = read(&a);
    assert_eq!(report["seed"], 7);
    assert_eq!(report["summary"]["failed"], 0);

    let mut strict = args.to_vec();
    strict.extend(["--tolerance", "all=1e-20", "--format", "table"]);
    let o = vnframes(&strict);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stdout).unwrap().contains("FAIL"));
}

#[test]
fn seed_environment_variable_overrides_flags() {
    let o = Command::new(env!("CARGO_BIN_EXE_vnframes"))
        .args(["verify", "--groups", "z2", "--suite", "bracket", "--trials", "1", "--seed", "7"])
        .env("VNFRAMES_SEED", "99")
        .output()
        .unwrap();
    assert!(o.status.success());
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["seed"], 99);
}

#[test]
fn verify_reads_a_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "cfg.json",
        &json!({"groups": ["z3"], "reps": ["double"], "suites": ["modular"], "trials": 2, "seed": 1}),
    );
    let o = vnframes(&["verify", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["records"].as_array().unwrap().iter().all(|r| r["rep"] == "double"));
}

#[test]
fn bad_inputs_exit_with_two() {
    assert_eq!(vnframes(&["verify", "--groups", "q8"]).status.code(), Some(2));
    assert_eq!(vnframes(&["verify", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(vnframes(&["verify", "--groups", "z2", "--format", "yaml"]).status.code(), Some(2));
    assert_eq!(vnframes(&["rep", "translation", "--group", "nonsense"]).status.code(), Some(2));
}
