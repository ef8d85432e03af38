//! Emitted trace lines must validate against the published schema
//! file, so external tooling can rely on it instead of reading the
//! writer's source.
//!
//! The checker below implements exactly the JSON Schema subset the
//! file uses and panics on any keyword it does not know, so extending
//! the schema without extending the test fails loudly.

use serde_json::Value;

use controlg::config::{self, SimConfig};
use controlg::sim::engine::run_simulation;
use controlg::trace::{write_header, write_record};

fn schema_file() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/schema/trace.schema.json");
    let text = std::fs::read_to_string(path).expect("schema file must ship with the crate");
    serde_json::from_str(&text).expect("schema file must be valid JSON")
}

/// Follows local `$ref` chains to the target schema object.
fn resolve<'a>(root: &'a Value, schema: &'a Value) -> &'a Value {
    match schema.get("$ref").and_then(Value::as_str) {
        Some(r) => {
            let path = r.strip_prefix("#/").expect("only local refs are supported");
            let mut cur = root;
            for part in path.split('/') {
                cur = cur.get(part).unwrap_or_else(|| panic!("dangling $ref {r}"));
            }
            resolve(root, cur)
        }
        None => schema,
    }
}

const KNOWN_KEYWORDS: [&str; 15] = [
    "$ref",
    "$schema",
    "additionalProperties",
    "const",
    "definitions",
    "dependencies",
    "description",
    "items",
    "minItems",
    "minimum",
    "oneOf",
    "properties",
    "required",
    "title",
    "type",
];

fn type_matches(name: &str, value: &Value) -> bool {
    match name {
        "object" => value.is_object(),
        "array" => value.is_array(),
        "string" => value.is_string(),
        "number" => value.is_number(),
        "integer" => value.is_i64() || value.is_u64(),
        "boolean" => value.is_boolean(),
        "null" => value.is_null(),
        other => panic!("unsupported type keyword '{other}'"),
    }
}

fn conforms(root: &Value, schema: &Value, value: &Value) -> bool {
    let schema = resolve(root, schema);
    let obj = schema.as_object().expect("schema nodes are objects");
    for key in obj.keys() {
        assert!(KNOWN_KEYWORDS.contains(&key.as_str()), "keyword '{key}' not implemented");
    }
    if let Some(branches) = obj.get("oneOf").and_then(Value::as_array) {
        let hits = branches.iter().filter(|b| conforms(root, b, value)).count();
        if hits != 1 {
            return false;
        }
    }
    if let Some(expected) = obj.get("const") {
        if value != expected {
            return false;
        }
    }
    if let Some(name) = obj.get("type").and_then(Value::as_str) {
        if !type_matches(name, value) {
            return false;
        }
    }
    if let Some(min) = obj.get("minimum").and_then(Value::as_f64) {
        match value.as_f64() {
            Some(x) if x >= min => {}
            _ => return false,
        }
    }
    if let Some(items) = obj.get("items") {
        if let Some(elems) = value.as_array() {
            if !elems.iter().all(|e| conforms(root, items, e)) {
                return false;
            }
        }
    }
    if let Some(min) = obj.get("minItems").and_then(Value::as_u64) {
        if let Some(elems) = value.as_array() {
            if (elems.len() as u64) < min {
                return false;
            }
        }
    }
    if let Some(required) = obj.get("required").and_then(Value::as_array) {
        if let Some(map) = value.as_object() {
            for key in required {
                if !map.contains_key(key.as_str().expect("required entries are strings")) {
                    return false;
                }
            }
        }
    }
    if let Some(map) = value.as_object() {
        let props = obj.get("properties").and_then(Value::as_object);
        if let Some(props) = props {
            for (key, sub) in props {
                if let Some(v) = map.get(key) {
                    if !conforms(root, sub, v) {
                        return false;
                    }
                }
            }
        }
        if obj.get("additionalProperties") == Some(&Value::Bool(false)) {
            let allowed = props.expect("additionalProperties:false needs properties");
            if map.keys().any(|k| !allowed.contains_key(k)) {
                return false;
            }
        }
        if let Some(deps) = obj.get("dependencies").and_then(Value::as_object) {
            for (key, needs) in deps {
                if map.contains_key(key) {
                    let needs = needs.as_array().expect("dependency lists only");
                    for need in needs {
                        if !map.contains_key(need.as_str().expect("dependency names")) {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

/// Renders a short run with both sensing and plain blocks to JSONL.
fn rendered_lines() -> Vec<String> {
    let mut cfg = SimConfig::default();
    cfg.graph.n = 12;
    cfg.objectives.h = 3;
    cfg.run.epochs = 2;
    cfg.run.blocks_per_epoch = 12;
    cfg.run.sense_period = 4;
    cfg.run.seed = 9;
    let out = run_simulation(&cfg).expect("run must succeed");
    assert!(!out.summary.diverged);
    let mut buf = Vec::new();
    write_header(&mut buf, &config::serialize(&cfg)).unwrap();
    for rec in &out.records {
        write_record(&mut buf, rec).unwrap();
    }
    String::from_utf8(buf).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn every_emitted_line_validates() {
    let schema = schema_file();
    let lines = rendered_lines();
    assert_eq!(lines.len(), 25, "header plus one record per block");
    let header_def = &schema["definitions"]["header"];
    let record_def = &schema["definitions"]["record"];
    let mut sensing = 0;
    for (idx, line) in lines.iter().enumerate() {
        let value: Value = serde_json::from_str(line).unwrap();
        assert!(conforms(&schema, &schema, &value), "line {} fails the schema", idx + 1);
        if idx == 0 {
            assert!(conforms(&schema, header_def, &value));
            assert!(!conforms(&schema, record_def, &value));
        } else {
            assert!(conforms(&schema, record_def, &value));
            assert!(!conforms(&schema, header_def, &value));
            if value.get("rq").is_some() {
                sensing += 1;
            }
        }
    }
    // Blocks 1, 5, 9 of each epoch sense; the rest must omit the
    // sensing fields.
    assert_eq!(sensing, 6);
}

#[test]
fn schema_rejects_malformed_lines() {
    let schema = schema_file();
    let lines = rendered_lines();
    let reject = |v: &Value| assert!(!conforms(&schema, &schema, v), "accepted {v}");

    let mut header: Value = serde_json::from_str(&lines[0]).unwrap();
    header["schema"] = Value::String("controlg-trace-v0".into());
    reject(&header);

    let plain = lines
        .iter()
        .skip(1)
        .find(|l| !l.contains("\"rq\""))
        .expect("some block must not sense");
    let base: Value = serde_json::from_str(plain).unwrap();

    let mut v = base.clone();
    v["surprise"] = Value::from(1);
    reject(&v);

    let mut v = base.clone();
    v.as_object_mut().unwrap().remove("e");
    reject(&v);

    // Sensing fields travel together.
    let mut v = base.clone();
    v["phi"] = Value::from(-2.5);
    reject(&v);

    let mut v = base.clone();
    v["n"] = serde_json::json!([1.5, 2.0]);
    reject(&v);

    let mut v = base.clone();
    v["epoch"] = Value::from(0);
    reject(&v);

    let mut v = base;
    v["losses"] = serde_json::json!([]);
    reject(&v);
}
