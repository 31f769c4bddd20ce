//! Report rendering. JSON is pretty-printed serde output; CSV follows
//! RFC 4180 (CRLF line ends, quoting only where needed). Both renderings
//! are pure functions of the data, so identical runs emit identical bytes.

use serde::Serialize;
use serde_json::Value;

/// f64 wrapper that serializes infinities as the string "inf" instead of
/// JSON null.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExtVal(#[serde(with = "xlab_core::extreal")] pub f64);

pub fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    let mut body = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    body.push('\n');
    Ok(body)
}

/// Shortest round-trip decimal form, with named infinities.
pub fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_owned()
    }
}

pub fn csv_row(fields: &[&str]) -> String {
    let mut row = fields
        .iter()
        .map(|f| csv_escape(f))
        .collect::<Vec<_>>()
        .join(",");
    row.push_str("\r\n");
    row
}

fn cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        nested => serde_json::to_string(nested).expect("JSON value reserializes"),
    }
}

/// Two-column key,value table of a report's top-level fields (keys in
/// serde_json's deterministic alphabetical order; nested values as compact
/// JSON).
pub fn to_key_value_csv<T: Serialize>(value: &T) -> Result<String, String> {
    let root = serde_json::to_value(value).map_err(|e| e.to_string())?;
    let Value::Object(map) = root else {
        return Err("key-value rendering needs an object-shaped report".into());
    };
    let mut body = csv_row(&["key", "value"]);
    for (k, v) in &map {
        body.push_str(&csv_row(&[k, &cell(v)]));
    }
    Ok(body)
}
