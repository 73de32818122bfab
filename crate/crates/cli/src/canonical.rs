//! Canonical JSON: sorted keys, two-space indentation, every float written
//! with 17 significant digits. Records are wrapped in an envelope whose
//! SHA-256 digest covers the canonical text of `meta` and `payload`.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const TOOL: &str = "danm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_u64() {
                write!(out, "{i}").unwrap();
            } else if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else {
                write!(out, "{:.16e}", n.as_f64().unwrap_or(f64::NAN)).unwrap();
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string escapes")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // scalar arrays stay on one line; nested structure gets one item per line
            if items.iter().all(|i| !i.is_array() && !i.is_object()) {
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(item, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&"  ".repeat(indent + 1));
                write_value(item, indent + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
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
            for (k, key) in keys.iter().enumerate() {
                out.push_str(&"  ".repeat(indent + 1));
                out.push_str(&serde_json::to_string(key).expect("string escapes"));
                out.push_str(": ");
                write_value(&map[key.as_str()], indent + 1, out);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
    }
}

/// Canonical text of `v`, newline-terminated.
pub fn to_canonical<T: Serialize>(v: &T) -> Result<String, CliError> {
    let value = serde_json::to_value(v).map_err(|e| CliError::Internal(format!("serialize: {e}")))?;
    let mut out = String::new();
    write_value(&value, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn digest_of(meta: &Value, payload: &Value) -> Result<String, CliError> {
    let body = to_canonical(&json!({ "meta": meta, "payload": payload }))?;
    let hash = Sha256::digest(body.as_bytes());
    Ok(hash.iter().map(|b| format!("{b:02x}")).collect())
}

/// Envelope with the tool name, version and kind stamped into `meta`.
pub fn seal<T: Serialize>(kind: &str, mut meta: Value, payload: &T) -> Result<(String, String), CliError> {
    let payload = serde_json::to_value(payload).map_err(|e| CliError::Internal(format!("serialize: {e}")))?;
    let obj = meta.as_object_mut().ok_or_else(|| CliError::Internal("meta must be an object".into()))?;
    obj.insert("tool".into(), json!(TOOL));
    obj.insert("version".into(), json!(VERSION));
    obj.insert("kind".into(), json!(kind));
    let digest = digest_of(&meta, &payload)?;
    let text = to_canonical(&json!({
        "integrity": { "algorithm": "sha256", "digest": digest },
        "meta": meta,
        "payload": payload,
    }))?;
    Ok((text, digest))
}

/// Opened envelope.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub meta: Value,
    pub payload: Value,
    pub digest: String,
}

/// Parses an envelope, verifies its digest and checks its kind.
pub fn open(text: &str, what: &str, kind: &str) -> Result<Envelope, CliError> {
    let mut root: Value =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("{what}: not valid JSON: {e}")))?;
    let obj = root
        .as_object_mut()
        .ok_or_else(|| CliError::Input(format!("{what}: expected a JSON object")))?;
    let mut take = |key: &str| obj.remove(key).ok_or_else(|| CliError::Input(format!("{what}: missing field `{key}`")));
    let integrity = take("integrity")?;
    let meta = take("meta")?;
    let payload = take("payload")?;
    let claimed = integrity
        .get("digest")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Input(format!("{what}: integrity block has no digest")))?;
    let digest = digest_of(&meta, &payload)?;
    if claimed != digest {
        return Err(CliError::Input(format!(
            "{what}: integrity check failed (file digest {claimed}, content digest {digest}); the file was modified"
        )));
    }
    let found = meta.get("kind").and_then(Value::as_str).unwrap_or("");
    if found != kind {
        return Err(CliError::Input(format!("{what}: expected a {kind} record, found '{found}'")));
    }
    Ok(Envelope { meta, payload, digest })
}
