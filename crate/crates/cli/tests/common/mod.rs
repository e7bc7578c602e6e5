#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use serde_json::{json, Value};

pub fn workspace() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

pub fn path(rel: &str) -> String {
    workspace().join(rel).display().to_string()
}

fn load_schema(file: &str) -> Value {
    let text = std::fs::read_to_string(workspace().join("schema").join(file)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn cli_schema() -> &'static Value {
    static SCHEMA: OnceLock<Value> = OnceLock::new();
    SCHEMA.get_or_init(|| load_schema("cli-1.0.json"))
}

fn check(schema: &Value, instance: &Value, what: &str) {
    let validator = jsonschema::validator_for(schema).unwrap_or_else(|e| panic!("schema for {what}: {e}"));
    let errors: Vec<String> = validator
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{what} does not match its schema:\n{}\n{instance:#}", errors.join("\n"));
}

/// Asserts that `instance` matches the named definition of the output schema.
pub fn assert_output(def: &str, instance: &Value) {
    let mut schema = cli_schema().clone();
    schema["$ref"] = json!(format!("#/$defs/{def}"));
    check(&schema, instance, def);
}

/// Asserts that `instance` is a valid interchange document.
pub fn assert_interchange(instance: &Value) {
    static SCHEMA: OnceLock<Value> = OnceLock::new();
    check(SCHEMA.get_or_init(|| load_schema("vdmn-1.0.json")), instance, "interchange document");
}
