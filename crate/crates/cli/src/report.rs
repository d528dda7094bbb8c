//! Reports are JSON values; the text form is a rendering of the same value.

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Report {
    fields: Map<String, Value>,
    inputs: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Report {
        let mut fields = Map::new();
        fields.insert("command".into(), command.into());
        fields.insert("seed".into(), seed.into());
        Report { fields, inputs: Map::new() }
    }

    pub fn input(&mut self, name: &str, hash: String) {
        self.inputs.insert(name.into(), hash.into());
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.fields.insert(key.into(), value.into());
    }

    pub fn into_value(mut self) -> Value {
        self.fields.insert("inputs".into(), Value::Object(self.inputs));
        // serde_json maps are sorted, so field order is stable
        Value::Object(self.fields)
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let parts: Vec<String> = items.iter().filter_map(scalar).collect();
            Some(format!("[{}]", parts.join(", ")))
        }
        _ => None,
    }
}

fn render_into(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_into(x, indent + 1, out);
                    }
                }
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                match scalar(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}[{i}]\n"));
                        render_into(x, indent + 1, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
    }
}

pub fn render_text(v: &Value) -> String {
    let mut out = String::new();
    render_into(v, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn text_follows_the_value() {
        let v = json!({"b": [1, 2], "a": {"x": true, "y": [{"z": null}]}});
        assert_eq!(render_text(&v), "a:\n  x: true\n  y:\n    [0]\n      z: -\nb: [1, 2]\n");
    }

    #[test]
    fn hashes_are_hex() {
        assert_eq!(sha256(b"").len(), 64);
        assert!(sha256(b"abc").starts_with("ba7816bf"));
    }
}
