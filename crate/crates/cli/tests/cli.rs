//! Drives the `graphrel` binary end to end on the committed tiny fixture.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny").join(name)
}

fn graphrel(out: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_graphrel"));
    cmd.arg("--config").arg(fixture("config.json"));
    for (key, file) in [
        ("expression", "expression.csv"),
        ("labels", "labels.csv"),
        ("edges", "edges.tsv"),
        ("survival", "survival.csv"),
    ] {
        cmd.arg("--set").arg(format!("data.{key}={}", fixture(file).display()));
    }
    cmd.arg("--set").arg(format!("output_dir={}", out.display()));
    cmd.args(args).output().expect("binary runs")
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\n{}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read_json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

#[test]
fn train_eval_export_and_survival() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    ok(&graphrel(out, &["train"]));
    let manifest = read_json(out.join("run_manifest.json"));
    assert_eq!(manifest["train_loss"].as_array().unwrap().len(), 10);
    assert_eq!(manifest["ingest_report"]["dropped_genes"][0], "G99");
    assert_eq!(manifest["train_samples"].as_u64().unwrap() + manifest["validation_samples"].as_u64().unwrap(), 20);

    ok(&graphrel(out, &["eval"]));
    let m = read_json(out.join("metrics.json"));
    for key in ["accuracy", "f1_weighted", "f1_macro"] {
        let v = m[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&v), "{key} = {v}");
    }
    assert_eq!(m["class_names"].as_array().unwrap().len(), 3);

    ok(&graphrel(out, &["export-embeddings"]));
    let emb = std::fs::read_to_string(out.join("embeddings.csv")).unwrap();
    assert_eq!(emb.lines().count(), 21);
    assert!(emb.starts_with("sample_id,"));

    ok(&graphrel(out, &["export-attention"]));
    let att = std::fs::read_to_string(out.join("attention.csv")).unwrap();
    let mut lines = att.lines();
    assert_eq!(lines.next(), Some("node_a,node_b,epsilon"));
    let eps: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(!eps.is_empty() && eps.len() <= 10);
    assert!(eps.windows(2).all(|w| w[0].abs() >= w[1].abs()));

    ok(&graphrel(out, &["survival"]));
    let s = read_json(out.join("survival.json"));
    assert_eq!(s["samples"], 20);
    assert_eq!(s["clusters"].as_array().unwrap().len(), 2);
    let p = s["logrank"][0]["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert!(out.join("km.csv").exists());
}

#[test]
fn cv_writes_json_and_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(&graphrel(dir.path(), &["--set", "model.epochs=2", "cv"]));
    let table = std::fs::read_to_string(dir.path().join("cv_table.csv")).unwrap();
    let methods: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, ["hybrid", "gcnn", "gnb"]);
    let json = read_json(dir.path().join("cv_metrics.json"));
    assert_eq!(json[0]["splits"].as_array().unwrap().len(), 3);
}

#[test]
fn synthetic_files_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let gen = Command::new(env!("CARGO_BIN_EXE_graphrel"))
        .args(["--set", "synthetic.n=12", "--set", "synthetic.samples_per_class=15", "--set", "synthetic.avg_degree=4"])
        .arg("--set")
        .arg(format!("output_dir={}", out.display()))
        .arg("synth-gen")
        .output()
        .unwrap();
    ok(&gen);
    let (ids, genes, x) = graphrel::data::read_matrix_csv(&out.join("expression.csv")).unwrap();
    assert_eq!((ids.len(), genes.len(), x.dim()), (30, 12, (30, 12)));
    let meta = read_json(out.join("synthetic_meta.json"));
    assert_eq!(meta["samples"], 30);
    let loaded = graphrel::data::load_real_dataset(
        &out.join("expression.csv"),
        &out.join("labels.csv"),
        &out.join("edges.tsv"),
        None,
    )
    .unwrap();
    assert_eq!(loaded.graph.num_edges(), meta["edges"].as_u64().unwrap() as usize);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_graphrel");
    let dump = Command::new(bin).args(["config", "dump"]).output().unwrap();
    ok(&dump);
    let cfg: serde_json::Value = serde_json::from_slice(&dump.stdout).unwrap();
    assert_eq!(cfg["model"]["kappa"], 200);

    let bad_key = Command::new(bin).args(["--set", "model.nope=1", "config", "dump"]).output().unwrap();
    assert_eq!(bad_key.status.code(), Some(1));
    let bad_cmd = Command::new(bin).arg("frobnicate").output().unwrap();
    assert_eq!(bad_cmd.status.code(), Some(1));

    let missing = Command::new(bin)
        .args(["--set", "data.expression=/nonexistent/x.csv", "--set", "data.labels=/nonexistent/y.csv"])
        .args(["--set", "data.edges=/nonexistent/e.tsv"])
        .arg("--set")
        .arg(format!("output_dir={}", dir.path().display()))
        .arg("train")
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2), "{}", String::from_utf8_lossy(&missing.stderr));
}
