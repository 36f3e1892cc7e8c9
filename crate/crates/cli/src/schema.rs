//! Versioned description of every output the CLI writes, printed by `--schema`.
//!
//! JSON outputs are described with JSON Schema (draft 2020-12). Floats that
//! can be non-finite are nullable, since JSON has no infinity.

use serde_json::{json, Value};

pub const SCHEMA_VERSION: u64 = 1;

pub const EVAL_COLUMNS: [&str; 4] = ["x", "f", "bbar", "weighted_error"];
pub const MODULUS_COLUMNS: [&str; 5] = ["t", "omega", "omega_main", "ratio", "k_upper"];
pub const CHECK_COLUMNS: [&str; 13] = [
    "check",
    "function",
    "record",
    "n",
    "t",
    "value",
    "numerator",
    "argmax",
    "slope",
    "residual",
    "spread",
    "target",
    "pass",
];
pub const LIST_COLUMNS: [&str; 5] = ["name", "kind", "beta", "second_derivative", "alpha0"];

fn float() -> Value {
    json!({"type": ["number", "null"]})
}

fn object(props: Value) -> Value {
    let required: Vec<String> = props.as_object().map(|m| m.keys().cloned().collect()).unwrap_or_default();
    json!({"type": "object", "properties": props, "required": required})
}

fn nullable(reference: &str) -> Value {
    json!({"anyOf": [{"type": "null"}, {"$ref": reference}]})
}

fn definitions() -> Value {
    let fit = object(json!({"slope": float(), "intercept": float(), "residual": float()}));
    let rule = object(json!({"slope_min": float(), "slope_max": float(), "spread_max": float()}));
    let trend = object(json!({
        "slope": float(),
        "residual": float(),
        "max_over_median": float(),
        "tail_max_over_median": float(),
        "rule": {"$ref": "#/$defs/trend_rule"},
        "bounded": {"type": "boolean"},
    }));
    let ratio_row = object(json!({
        "n": {"type": "integer", "minimum": 1},
        "value": float(),
        "numerator": float(),
        "argmax": float(),
    }));
    let regime_row = object(json!({"n": {"type": "integer"}, "near_endpoint": float(), "interior": float()}));
    let bounded = object(json!({
        "check": {"type": "string"},
        "function": {"type": ["string", "null"]},
        "xi": float(),
        "alpha": float(),
        "lambda": float(),
        "parameters": {"type": "object", "additionalProperties": float()},
        "rows": {"type": "array", "items": {"$ref": "#/$defs/ratio_row"}},
        "regimes": {"type": "array", "items": {"$ref": "#/$defs/regime_row"}},
        "trend": {"$ref": "#/$defs/trend"},
        "pass": {"type": "boolean"},
    }));
    let rate = object(json!({
        "function": {"type": "string"},
        "xi": float(),
        "alpha": float(),
        "lambda": float(),
        "pairs": {"type": "array", "items": object(json!({"n": {"type": "integer"}, "error": float()}))},
        "normalized": {"type": "array", "items": {"$ref": "#/$defs/ratio_row"}},
        "normalized_trend": nullable("#/$defs/trend"),
        "representative": {"type": "array", "items": object(json!({"x": float(), "slope": float(), "residual": float()}))},
        "slope": float(),
        "residual": float(),
        "target": float(),
        "tolerance": float(),
        "pass": {"type": "boolean"},
    }));
    let inverse = object(json!({
        "function": {"type": "string"},
        "xi": float(),
        "alpha": float(),
        "lambda": float(),
        "rows": {"type": "array", "items": object(json!({
            "t": float(), "omega": float(), "omega_main": float(), "ratio": float()
        }))},
        "omega_fit": nullable("#/$defs/fit"),
        "main_fit": nullable("#/$defs/fit"),
        "target": float(),
        "tolerance": float(),
        "sandwich": float(),
        "sandwich_bound": float(),
        "pass": {"type": "boolean"},
    }));
    let consistency = object(json!({
        "applicable": {"type": "boolean"},
        "direct_slope": float(),
        "inverse_slope": float(),
        "omega_slope": float(),
        "delta": float(),
        "omega_delta": float(),
        "tolerance": float(),
        "pass": {"type": "boolean"},
    }));
    let function_sweep = object(json!({
        "function": {"type": "string"},
        "kind": {"enum": ["linear", "smooth", "singular"]},
        "xi": float(),
        "alpha": float(),
        "lambda": float(),
        "equivalence_applies": {"type": "boolean"},
        "direct": nullable("#/$defs/rate_report"),
        "inverse": {"$ref": "#/$defs/inverse_report"},
        "consistency": {"$ref": "#/$defs/consistency"},
        "pass": {"type": "boolean"},
    }));
    json!({
        "fit": fit,
        "trend_rule": rule,
        "trend": trend,
        "ratio_row": ratio_row,
        "regime_row": regime_row,
        "bounded_report": bounded,
        "rate_report": rate,
        "inverse_report": inverse,
        "consistency": consistency,
        "function_sweep": function_sweep,
        "config": {"type": "object"},
    })
}

fn envelope(command: &str, body: Value) -> Value {
    let mut props = json!({
        "schema_version": {"const": SCHEMA_VERSION},
        "note": {"type": "string"},
        "command": {"const": command},
        "config": {"$ref": "#/$defs/config"},
    });
    if let (Some(p), Some(b)) = (props.as_object_mut(), body.as_object()) {
        p.extend(b.clone());
    }
    let mut schema = object(props);
    schema["$schema"] = json!("https://json-schema.org/draft/2020-12/schema");
    schema["$defs"] = definitions();
    schema
}

/// JSON Schema of one `sweep` output line.
pub fn sweep_schema() -> Value {
    let mut s = envelope("sweep", json!({
        "timestamp": {"type": "integer", "minimum": 0},
        "report": {"$ref": "#/$defs/function_sweep"},
    }));
    s["title"] = json!("bbar sweep line");
    s
}

/// JSON Schema of the `check --format json` document.
pub fn check_schema() -> Value {
    let report = json!({"anyOf": [
        {"$ref": "#/$defs/bounded_report"},
        {"$ref": "#/$defs/rate_report"},
        {"$ref": "#/$defs/inverse_report"},
    ]});
    envelope("check", json!({
        "pass": {"type": "boolean"},
        "reports": {"type": "array", "items": report},
    }))
}

fn table_schema(command: &str, columns: &[&str]) -> Value {
    let cells: serde_json::Map<String, Value> = columns.iter().map(|c| (c.to_string(), json!({}))).collect();
    envelope(command, json!({
        "rows": {"type": "array", "items": object(Value::Object(cells))},
    }))
}

/// Everything `--schema` prints.
pub fn schema() -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "float_format": "17 significant digits, scientific notation; non-finite values are null in JSON",
        "csv": {
            "eval": EVAL_COLUMNS,
            "modulus": MODULUS_COLUMNS,
            "check": CHECK_COLUMNS,
            "list-functions": LIST_COLUMNS,
            "calibrate": ["function", "xi", "alpha", "lambda", "alpha0"],
        },
        "json": {
            "sweep": sweep_schema(),
            "check": check_schema(),
            "eval": table_schema("eval", &EVAL_COLUMNS),
            "modulus": table_schema("modulus", &MODULUS_COLUMNS),
            "list-functions": table_schema("list-functions", &LIST_COLUMNS),
        },
    })
}
