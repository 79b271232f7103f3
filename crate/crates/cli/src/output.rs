use std::fmt::Write as _;

use serde_json::{Map, Value};

pub const SIGNIFICANT_DIGITS: i32 = 9;

/// Stamps schema version and invocation, rounds floats, and renders either
/// JSON or a two-column table.
pub fn render(body: Value, invocation: &[String], pretty: bool) -> String {
    let mut doc = Map::new();
    doc.insert("schema_version".into(), qctol::SCHEMA_VERSION.into());
    doc.insert("invocation".into(), invocation.to_vec().into());
    if let Value::Object(fields) = body {
        doc.extend(fields);
    } else {
        doc.insert("result".into(), body);
    }
    let mut doc = Value::Object(doc);
    qctol::json::round_significant(&mut doc, SIGNIFICANT_DIGITS);
    if pretty {
        table(&doc)
    } else {
        doc.to_string()
    }
}

fn table(doc: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", doc, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    out.pop();
    out
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| flatten(&key(k), x, rows)),
        Value::Array(a) if a.iter().any(|x| x.is_object() || x.is_array()) => {
            a.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, rows))
        }
        Value::Array(a) => {
            let cells: Vec<String> = a.iter().map(scalar).collect();
            rows.push((prefix.to_string(), cells.join(" ")));
        }
        other => rows.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
