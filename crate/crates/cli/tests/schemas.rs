//! Emitted JSON validates against the versioned schemas in `schema/`.

use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn schema(name: &str) -> jsonschema::Validator {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schema").join(name);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    jsonschema::validator_for(&v).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run(args: &[&str]) -> Value {
    let o = Command::new(env!("CARGO_BIN_EXE_chazy")).args(args).output().unwrap();
    serde_json::from_slice(&o.stdout).unwrap()
}

fn check(schema_file: &str, doc: &Value) {
    let v = schema(schema_file);
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{schema_file}: {errors:?}");
}

#[test]
fn ledger_output_matches_schema() {
    check("ledger.v1.json", &run(&["verify", "all", "--timings"]));
    check("ledger.v1.json", &run(&["verify", "all", "--group", "singular"]));
}

#[test]
fn catalog_output_matches_schema() {
    check("catalog.v1.json", &run(&["catalog", "list"]));
    for name in ["chazy.III.system", "chazy.IX", "chazy.IX.pde"] {
        check("catalog.v1.json", &run(&["catalog", "show", name]));
    }
}

#[test]
fn singular_output_matches_schema() {
    check("singular.v1.json", &run(&["analyze", "singular", "chazy.III.system"]));
    check("singular.v1.json", &run(&["analyze", "singular", "three-param.system"]));
}

#[test]
fn series_output_matches_schema() {
    check("series.v1.json", &run(&["series", "chazy.III.system"]));
    check("series.v1.json", &run(&["series", "chazy.III.v"]));
    check("series.v1.json", &run(&["series", "chazy.III.system", "--balance", "0,-2,-1"]));
}

#[test]
fn trajectory_output_matches_schema() {
    check("trajectory.v1.json", &run(&["integrate", "darboux-halphen", "--ic", "-1,-1,-1", "--path", "0,2", "--format", "json"]));
}

#[test]
fn schemas_reject_wrong_versions() {
    let mut doc = run(&["verify", "all", "--group", "relations"]);
    doc["schema"] = Value::from("chazy-ledger/2");
    assert!(!schema("ledger.v1.json").is_valid(&doc));
}
