//! Deterministic JSON emission: keys keep insertion order, floats are printed
//! with 17 significant digits, and non-finite floats become `null`.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::VERSION;

/// Renders `value` as pretty JSON with fixed float formatting.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let x = n.as_f64().expect("f64 number");
                if x.is_finite() {
                    let _ = write!(out, "{x:.16e}");
                } else {
                    out.push_str("null");
                }
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                pad(out, indent + 1);
                write_value(out, item, indent + 1);
            }
            out.push('\n');
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                out.push_str(if i == 0 { "\n" } else { ",\n" });
                pad(out, indent + 1);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 1);
            }
            out.push('\n');
            pad(out, indent);
            out.push('}');
        }
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

/// A self-describing report: command, library version, resolved config and result.
pub fn envelope<T: Serialize>(command: &str, config: &ExperimentConfig, result: &T) -> Result<Value> {
    Ok(json!({
        "command": command,
        "version": VERSION,
        "config": serde_json::to_value(config)?,
        "result": serde_json::to_value(result)?,
    }))
}

pub fn write_report<T: Serialize>(path: &Path, command: &str, config: &ExperimentConfig, result: &T) -> Result<String> {
    let text = to_json(&envelope(command, config, result)?)?;
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, &text)?;
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_formatting() {
        let v = json!({"b": 0.1, "a": [1, -2.5e-300, f64::NAN], "s": "q\"", "e": {}});
        let text = to_json(&v).unwrap();
        assert!(text.starts_with("{\n  \"b\": 1.0000000000000001e-1,"), "{text}");
        assert!(text.contains("-2.5000000000000000e-300"));
        assert!(text.contains("null"));
        assert!(text.contains("\"q\\\"\""));
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
        assert_eq!(back["a"][0].as_i64(), Some(1));
    }
}
