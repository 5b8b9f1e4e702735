use chaoslab::io::{parse_config_str, ExperimentKind, RunConfig};
use serde_json::Value;

fn schema() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schema/run_config.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn resolve<'a>(root: &'a Value, node: &'a Value) -> &'a Value {
    match node.get("$ref").and_then(Value::as_str) {
        Some(r) => r.trim_start_matches("#/").split('/').fold(root, |v, k| &v[k]),
        None => node,
    }
}

/// Every key of `value` is declared by `node` (recursively).
fn check_keys(root: &Value, node: &Value, value: &Value, at: &str) {
    let node = resolve(root, node);
    let (Some(obj), Some(props)) = (value.as_object(), node.get("properties").and_then(Value::as_object)) else {
        return;
    };
    for (k, v) in obj {
        let child = props.get(k).unwrap_or_else(|| panic!("{at}.{k} is missing from the schema"));
        check_keys(root, child, v, &format!("{at}.{k}"));
    }
}

#[test]
fn presets_only_use_declared_keys() {
    let s = schema();
    for kind in ExperimentKind::ALL {
        let value = serde_json::to_value(RunConfig::preset(kind)).unwrap();
        check_keys(&s, &s, &value, kind.name());
    }
}

/// JSON equality with `1` and `1.0` treated as equal.
fn same(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| same(v, w)))
        }
        _ => a == b,
    }
}

#[test]
fn schema_defaults_match_parsed_defaults() {
    let s = schema();
    let parsed = serde_json::to_value(
        parse_config_str(r#"{"experiment":"chaos-rate","kernel":{"family":"holder_power","alpha":0.5}}"#).unwrap(),
    )
    .unwrap();
    let mut compared = 0;
    for (key, prop) in s["properties"].as_object().unwrap() {
        let prop = resolve(&s, prop);
        if let Some(d) = prop.get("default") {
            assert!(same(&parsed[key], d), "{key}: parsed {}, schema {d}", parsed[key]);
            compared += 1;
        }
        for (sub, p) in prop.get("properties").and_then(Value::as_object).into_iter().flatten() {
            if let Some(d) = p.get("default") {
                let got = &parsed[key][sub];
                assert!(same(got, d), "{key}.{sub}: parsed {got}, schema {d}");
                compared += 1;
            }
        }
    }
    assert!(compared > 20, "{compared}");
}

#[test]
fn required_keys_agree() {
    let s = schema();
    assert_eq!(s["required"], serde_json::json!(["experiment", "kernel"]));
    assert!(parse_config_str(r#"{"experiment":"chaos-rate"}"#).is_err());
}
