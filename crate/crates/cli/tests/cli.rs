use std::fs;
use std::path::Path;
use std::process::Command;

use jbshap::Dataset;
use jbshap_cli::{load_dataset_csv, write_dataset_csv, AttributionsReport, DatasetError};
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_jbshap"))
}

fn write_json(dir: &Path, name: &str, v: &Value) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn two_feature_config() -> Value {
    let third = 1.0 / 3.0;
    json!({
        "model": {"table": {"entries": [
            {"point": [0.0, 0.0], "value": 0.0},
            {"point": [0.0, 1.0], "value": 1.0},
            {"point": [1.0, 0.0], "value": 0.0},
            {"point": [1.0, 1.0], "value": 1.0}
        ]}},
        "density": {"table": {"entries": [
            {"point": [0.0, 0.0], "value": third},
            {"point": [0.0, 1.0], "value": third},
            {"point": [1.0, 1.0], "value": third}
        ]}},
        "baseline": {"point": {"values": [0.0, 0.0]}},
        "explicands": {"points": {"points": [[1.0, 1.0]]}},
        "value_function": "jbshap",
        "estimator": "exact"
    })
}

#[test]
fn csv_round_trip_keeps_names_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let data = Dataset::from_rows(vec![vec![0.5, -1.0], vec![1e-3, 2.25]])
        .unwrap()
        .with_names(vec!["age".into(), "sex".into()])
        .unwrap();
    write_dataset_csv(&path, &data).unwrap();
    let back = load_dataset_csv(&path).unwrap();
    assert_eq!(back.names().unwrap(), ["age", "sex"]);
    assert_eq!(back.rows(), data.rows());
}

#[test]
fn csv_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "a,b\n").unwrap();
    assert!(load_dataset_csv(&empty).is_err());

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b\n1,2\n3,x\n").unwrap();
    match load_dataset_csv(&bad) {
        Err(DatasetError::NonNumeric { line, column, .. }) => {
            assert_eq!(line, 3);
            assert_eq!(column, "b");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn explain_two_feature_game() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(dir.path(), "explain.json", &two_feature_config());
    let out = dir.path().join("out");
    let status = bin()
        .args(["explain", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let report: AttributionsReport = serde_json::from_slice(&fs::read(out.join("attributions.json")).unwrap()).unwrap();
    let phi = &report.explicands[0].attribution.phi;
    assert!(phi[0].abs() < 1e-12);
    assert!((phi[1] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn axioms_jbshap_all_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(
        dir.path(),
        "axioms.json",
        &json!({"builders": ["jbshap"], "trials": 20, "tolerance": 1e-9}),
    );
    let out = dir.path().join("out");
    let st = bin().args(["axioms", "--seed", "3", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let reports: Vec<Value> = serde_json::from_slice(&fs::read(out.join("axioms.json")).unwrap()).unwrap();
    assert_eq!(reports.len(), 7);
    assert!(reports.iter().all(|r| r["pass"] == json!(true)));
}

#[test]
fn invalid_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = two_feature_config();
    cfg["surprise"] = json!(1);
    let path = write_json(dir.path(), "bad.json", &cfg);
    let out = dir.path().join("out");
    let st = bin().args(["explain", "--config"]).arg(&path).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(2));
    assert!(!out.exists());

    // jbshap without a density is inconsistent, not a runtime failure
    let mut cfg = two_feature_config();
    cfg.as_object_mut().unwrap().remove("density");
    let path = write_json(dir.path(), "nodensity.json", &cfg);
    let st = bin().args(["explain", "--config"]).arg(&path).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), "a,b,c\n0,1,2\n1,1,0\n2,0,1\n1,2,2\n0,0,0\n").unwrap();
    let cfg = write_json(
        dir.path(),
        "explain.json",
        &json!({
            "dataset": "d.csv",
            "model": {"linear": {"weights": [1.0, -2.0, 0.5], "bias": 0.1}},
            "density": {"smoothed": {"sigma": 0.7}},
            "baseline": "dataset",
            "explicands": "all_rows",
            "value_function": {"rjbshap": {"samples": 3}},
            "estimator": {"permutation": {"permutations": 64}}
        }),
    );
    let run = |name: &str| {
        let out = dir.path().join(name);
        let st = bin().args(["explain", "--seed", "11", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert!(st.success());
        fs::read(out.join("attributions.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn train_then_use_density_and_surrogate() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d.csv"), "a,b\n0,0\n0,1\n1,1\n1,1\n0,0\n").unwrap();
    let trainer = json!({"learning_rate": 0.05, "batch_size": 4, "epochs": 30, "seed": 0, "loss": "mse"});
    let model = json!({"linear": {"weights": [1.0, 2.0], "bias": 0.0}});
    let dcfg = write_json(
        dir.path(),
        "td.json",
        &json!({"dataset": "d.csv", "baseline": "dataset", "nce": {"hidden": [4], "clip": [0.01, 0.99], "trainer": trainer}}),
    );
    let scfg = write_json(
        dir.path(),
        "ts.json",
        &json!({"dataset": "d.csv", "model": model, "surrogate": {
            "hidden": [8], "encoding": "masked", "masks": "exhaustive", "trainer": trainer}}),
    );
    assert!(bin().args(["train-density", "--config"]).arg(&dcfg).arg("--out").arg(dir.path()).status().unwrap().success());
    assert!(bin().args(["train-surrogate", "--config"]).arg(&scfg).arg("--out").arg(dir.path()).status().unwrap().success());

    for (vf, density) in [
        (json!("jbshap"), Some(json!({"classifier": {"path": "density.json"}}))),
        (json!({"ces_supervised": {"path": "surrogate.json"}}), None),
    ] {
        let mut cfg = json!({
            "model": model,
            "baseline": {"point": {"values": [0.0, 0.0]}},
            "explicands": {"points": {"points": [[1.0, 1.0]]}},
            "value_function": vf,
            "estimator": "exact"
        });
        if let Some(d) = density {
            cfg["density"] = d;
        }
        let path = write_json(dir.path(), "e.json", &cfg);
        let out = dir.path().join("e");
        let o = bin().args(["explain", "--config"]).arg(&path).arg("--out").arg(&out).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn metrics_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(
        dir.path(),
        "m.json",
        &json!({
            "model": {"linear": {"weights": [1.0, 2.0, 3.0], "bias": 0.0}},
            "explicand": [1.0, 1.0, 1.0],
            "baseline": [0.0, 0.0, 0.0],
            "value_function": "bshap",
            "estimator": "exact",
            "fractions": [0.0, 0.5, 1.0],
            "target": "f",
            "sensitivity": {"fracs": [0.34, 0.67], "trials": 8}
        }),
    );
    let out = dir.path().join("out");
    let o = bin().args(["metrics", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("deletion_curve.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("fraction,value"));
    let m: Value = serde_json::from_slice(&fs::read(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["curve"]["values"][0], json!(6.0));
    assert_eq!(m["curve"]["values"][2], json!(0.0));
    assert!((m["sensitivity_n"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}
