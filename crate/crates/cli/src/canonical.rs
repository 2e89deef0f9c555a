//! Deterministic JSON: sorted keys, two-space indent, floats as `{:.16e}`.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn to_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(value_to_string(&v))
}

pub fn value_to_string(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, level: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) if !n.is_f64() => out.push_str(&u.to_string()),
            (_, Some(i)) if !n.is_f64() => out.push_str(&i.to_string()),
            _ => out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                indent(level + 1, out);
                write_value(item, level + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(level, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                indent(level + 1, out);
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], level + 1, out);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(level, out);
            out.push('}');
        }
    }
}

/// Hex sha256 of the canonical form of `v`.
pub fn digest(v: &Value) -> String {
    hex::encode(Sha256::digest(value_to_string(v).as_bytes()))
}

/// Parses JSON, turning errors into a byte offset into `text`.
pub fn parse<T: serde::de::DeserializeOwned>(text: &str, source: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        origin: source.to_string(),
        offset: byte_offset(text, e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Converts serde_json's 1-based line and column to a 0-based byte offset.
pub fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let start: usize = text.split_inclusive('\n').take(line - 1).map(str::len).sum();
    (start + column.saturating_sub(1)).min(text.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let v = json!({"b": 1.5, "a": [1, -2, 0.1], "c": {"z": null, "y": true}});
        let s = value_to_string(&v);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("1.5000000000000000e0"));
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("-2"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(value_to_string(&back), s);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [std::f64::consts::PI, -1e-300, 0.1 + 0.2, 6.02214076e23, 0.0] {
            let back: f64 = format_float(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn offsets_point_at_the_problem() {
        let text = "{\n  \"a\": 1,\n  \"b\": ?\n}";
        let err = parse::<Value>(text, "inline").unwrap_err();
        let CliError::Parse { offset, .. } = err else { panic!("{err}") };
        assert_eq!(&text[offset..offset + 1], "?");
    }
}
