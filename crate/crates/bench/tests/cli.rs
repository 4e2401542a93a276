use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sfft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfft")).args(args).output().expect("spawn sfft")
}

fn ok(args: &[&str]) -> Output {
    let out = sfft(args);
    assert!(out.status.success(), "sfft {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema").join(name);
    jsonschema::JSONSchema::compile(&json(&path)).expect("schema compiles")
}

fn assert_valid(schema: &jsonschema::JSONSchema, doc: &Value) {
    if let Err(errors) = schema.validate(doc) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("schema violations: {msgs:?}");
    }
}

#[test]
fn gen_run_verify_comb() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let rep = dir.path().join("report.json");
    let ver = dir.path().join("verified.json");
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    ok(&["gen", "--class", "comb", "--n", "64", "--d", "2", "--k", "16", "--seed", "5", "-o", &s(&spec)]);
    let spec_doc = json(&spec);
    assert_valid(&schema("spectrum.json"), &spec_doc);
    assert_eq!(spec_doc["entries"].as_array().unwrap().len(), 16);

    ok(&["run", "--algo", "exact", "--in", &s(&spec), "-o", &s(&rep)]);
    let report = json(&rep);
    assert_valid(&schema("report.v1.json"), &report);
    assert!(report["wall_time_ns"].is_u64());

    ok(&["verify", "--in", &s(&spec), "--report", &s(&rep), "-o", &s(&ver)]);
    let verified = json(&ver);
    assert_valid(&schema("report.v1.json"), &verified);
    assert_eq!(verified["success"], Value::Bool(true));
    assert_eq!(verified["precision"].as_f64(), Some(1.0));
    assert_eq!(verified["recall"].as_f64(), Some(1.0));
    assert_eq!(verified["samples"], report["samples"]);
}

#[test]
fn robust_on_noiseless_instance_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let spec_s = spec.to_str().unwrap();
    ok(&["gen", "--class", "rand-comb-mix", "--n", "32", "--d", "2", "--k", "8", "--seed", "2", "-o", spec_s]);
    let out = ok(&["run", "--algo", "robust", "--in", spec_s, "--no-timing"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_valid(&schema("report.v1.json"), &report);
    assert!(report["l2_error"].as_f64().unwrap() < 1e-8);
    assert_eq!(report["success"], Value::Bool(true));
}

#[test]
fn reports_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let spec_s = spec.to_str().unwrap();
    ok(&["gen", "--class", "overtones", "--n", "16", "--d", "2", "--k", "6", "--seed", "9", "--mu", "0.2", "-o", spec_s]);
    let again = ok(&["gen", "--class", "overtones", "--n", "16", "--d", "2", "--k", "6", "--seed", "9", "--mu", "0.2"]);
    assert_eq!(std::fs::read(&spec).unwrap(), again.stdout);
    for algo in ["exact", "robust"] {
        let a = ok(&["run", "--algo", algo, "--in", spec_s, "--no-timing", "--mu", "0.2"]);
        let b = ok(&["run", "--algo", algo, "--in", spec_s, "--no-timing", "--mu", "0.2"]);
        assert_eq!(a.stdout, b.stdout, "{algo}");
    }
}

#[test]
fn bench_outputs_validate_and_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, threads: &str| {
        let csv = dir.path().join(format!("{tag}.csv"));
        let agg = dir.path().join(format!("{tag}.json"));
        ok(&[
            "bench", "--algo", "exact", "--class", "comb-mix", "--k-list", "4,8", "--n", "64", "--d", "1",
            "--trials", "3", "--seed-base", "11", "--threads", threads, "--no-timing",
            "--csv", csv.to_str().unwrap(), "--json", agg.to_str().unwrap(),
        ]);
        (std::fs::read(csv).unwrap(), std::fs::read(&agg).unwrap(), json(&agg))
    };
    let (csv1, agg1, doc) = run("a", "1");
    let (csv2, agg2, _) = run("b", "3");
    assert_eq!(csv1, csv2);
    assert_eq!(agg1, agg2);
    assert_valid(&schema("aggregate.v1.json"), &doc);
    assert_eq!(doc["all_completed"], Value::Bool(true));
    let text = String::from_utf8(csv1).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "schema,algo,class,n,d,k,trial,seed,mu,eps,completed,wall_time_ns,samples,success,precision,recall,l2_error,error"
    );
    assert_eq!(lines.count(), 6);
}

#[test]
fn bench_exit_code_reflects_incomplete_trials() {
    let dir = tempfile::tempdir().unwrap();
    let agg = dir.path().join("agg.json");
    let out = sfft(&[
        "bench", "--algo", "exact", "--class", "comb", "--k-list", "2,64", "--n", "32", "--d", "1",
        "--trials", "2", "--csv", dir.path().join("rows.csv").to_str().unwrap(), "--json", agg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let doc = json(&agg);
    assert_eq!(doc["all_completed"], Value::Bool(false));
    assert_eq!(doc["per_k"][0]["completed"].as_u64(), Some(2));
    assert_eq!(doc["per_k"][1]["completed"].as_u64(), Some(0));
}

#[test]
fn bad_inputs_are_rejected() {
    let out = sfft(&["gen", "--class", "comb", "--n", "48", "--d", "1", "--k", "4"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("power of two"));
    let out = sfft(&["gen", "--class", "sawtooth", "--n", "64", "--d", "1", "--k", "4"]);
    assert!(!out.status.success());
    let out = sfft(&["run", "--algo", "fastest", "--in", "nowhere.json"]);
    assert!(!out.status.success());
}

#[test]
fn verify_refuses_oversized_domains() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("big.json");
    let rep = dir.path().join("big-report.json");
    let s = |p: &Path| p.to_str().unwrap().to_owned();
    ok(&["gen", "--class", "comb", "--n", "8192", "--d", "2", "--k", "4", "--seed", "1", "-o", &s(&spec)]);
    ok(&["run", "--algo", "exact", "--in", &s(&spec), "--no-timing", "-o", &s(&rep)]);
    let report = json(&rep);
    assert!(report["l2_error"].is_null());
    assert_eq!(report["success"], Value::Bool(true));
    let out = sfft(&["verify", "--in", &s(&spec), "--report", &s(&rep)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}
