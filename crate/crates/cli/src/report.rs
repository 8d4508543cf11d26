//! Command reports: one document per invocation, rendered as indented
//! key/value text or as JSON with the same content.

use serde::Serialize;
use serde_json::{Map, Value};

/// Coarse outcome of a command; decides the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Inclusion or universality holds, or the command has no verdict.
    Holds,
    /// A witness against the property was found.
    Witness,
    /// Budget exhausted or verdict unknown.
    Unknown,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Holds => 0,
            Outcome::Witness => 1,
            Outcome::Unknown => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub outcome: Outcome,
    doc: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, digest: u64) -> Self {
        let mut doc = Map::new();
        doc.insert("command".into(), command.into());
        doc.insert("inputs".into(), format!("{digest:016x}").into());
        Report { outcome: Outcome::Holds, doc }
    }

    pub fn verdict(&mut self, verdict: &str, outcome: Outcome) -> &mut Self {
        self.outcome = outcome;
        self.set("verdict", verdict)
    }

    pub fn set(&mut self, key: &str, v: impl Serialize) -> &mut Self {
        self.doc.insert(key.into(), serde_json::to_value(v).expect("serializable report field"));
        self
    }

    #[cfg(test)]
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.doc.get(key)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.doc {
            render(&mut out, k, v, 0);
        }
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("none".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) if !s.contains('\n') => Some(s.clone()),
        _ => None,
    }
}

fn render(out: &mut String, key: &str, v: &Value, indent: usize) {
    let pad = " ".repeat(indent);
    if let Some(s) = scalar(v) {
        out.push_str(&format!("{pad}{key}: {s}\n"));
        return;
    }
    match v {
        Value::String(s) => {
            out.push_str(&format!("{pad}{key}: |\n"));
            for l in s.lines() {
                out.push_str(&format!("{pad}  {l}\n"));
            }
        }
        Value::Array(xs) if xs.is_empty() => out.push_str(&format!("{pad}{key}: []\n")),
        Value::Array(xs) => {
            out.push_str(&format!("{pad}{key}:\n"));
            for x in xs {
                match (scalar(x), x) {
                    (Some(s), _) => out.push_str(&format!("{pad}  - {s}\n")),
                    (None, Value::Object(m)) => {
                        out.push_str(&format!("{pad}  -\n"));
                        for (k, v) in m {
                            render(out, k, v, indent + 4);
                        }
                    }
                    (None, other) => render(out, "-", other, indent + 2),
                }
            }
        }
        Value::Object(m) => {
            out.push_str(&format!("{pad}{key}:\n"));
            for (k, v) in m {
                render(out, k, v, indent + 2);
            }
        }
        _ => unreachable!(),
    }
}

/// FNV-1a over the given byte strings, separated so that `["ab","c"]` and `["a","bc"]` differ.
pub fn digest<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for p in parts {
        for &b in p.iter().chain(&[0xff]) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_layout() {
        let mut r = Report::new("demo", 1);
        r.verdict("included", Outcome::Holds).set("xs", [1, 2]).set("obj", serde_json::json!({"a": "b", "net": "x\ny"}));
        let t = r.to_text();
        assert!(t.starts_with("command: demo\ninputs: 0000000000000001\nverdict: included\n"), "{t}");
        assert!(t.contains("xs:\n  - 1\n  - 2\n"));
        assert!(t.contains("obj:\n  a: b\n  net: |\n    x\n    y\n"));
    }

    #[test]
    fn json_keeps_order() {
        let mut r = Report::new("demo", 0);
        r.set("z", 1).set("a", 2);
        let j = r.to_json();
        assert!(j.find("\"z\"").unwrap() < j.find("\"a\"").unwrap());
    }

    #[test]
    fn digest_separates_parts() {
        assert_ne!(digest([&b"ab"[..], b"c"]), digest([&b"a"[..], b"bc"]));
        assert_eq!(digest([&b"x"[..]]), digest([&b"x"[..]]));
    }
}
