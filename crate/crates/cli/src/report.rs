//! The JSON/CSV report envelope shared by every subcommand.

use std::io::Write;

use ruinkit_core::scalar::format_f64;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use ruinkit_core::ClaimDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The determinant conjecture failed at some index.
    Violation,
    /// Two independent computations disagreed beyond tolerance.
    CrossCheckFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Violation | Status::CrossCheckFailed => 2,
        }
    }

    /// The worse of two statuses.
    pub fn and(self, other: Status) -> Status {
        if self == Status::Ok {
            other
        } else {
            self
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: Value,
    pub dist: Option<ClaimDistribution>,
    pub modes: Vec<&'static str>,
    pub results: Value,
    pub diagnostics: Value,
    pub status: Status,
    /// Rows for `--format csv`; `None` flattens `results` to key/value pairs.
    pub rows: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    /// One-line summary for standard error when the status is not `Ok`.
    pub note: Option<String>,
}

impl RunReport {
    pub fn new(command: Value, dist: Option<&ClaimDistribution>, modes: Vec<&'static str>) -> Self {
        RunReport {
            command,
            dist: dist.cloned(),
            modes,
            results: Value::Null,
            diagnostics: Value::Null,
            status: Status::Ok,
            rows: None,
            note: None,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut top = Map::new();
        top.insert("command".into(), normalize(self.command.clone()));
        if let Some(d) = &self.dist {
            // Kept as parseable spec JSON rather than stringified.
            top.insert("dist".into(), sort_keys(d.to_json()));
            top.insert("dist_hash".into(), Value::String(spec_hash(d)));
        }
        top.insert("modes".into(), self.modes.clone().into());
        top.insert("results".into(), normalize(self.results.clone()));
        top.insert("diagnostics".into(), normalize(self.diagnostics.clone()));
        top.insert("status".into(), serde_json::to_value(self.status).unwrap());
        top.insert("exit_code".into(), self.status.exit_code().into());
        sort_keys(Value::Object(top))
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).unwrap();
        s.push('\n');
        s
    }

    pub fn render_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        match &self.rows {
            Some((header, rows)) => {
                w.write_record(header).unwrap();
                for r in rows {
                    w.write_record(r).unwrap();
                }
            }
            None => {
                w.write_record(["key", "value"]).unwrap();
                let mut flat = Vec::new();
                flatten("", &normalize(self.results.clone()), &mut flat);
                for (k, v) in flat {
                    w.write_record([k, v]).unwrap();
                }
            }
        }
        w.flush().unwrap();
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        let text = match format {
            Format::Json => self.render_json(),
            Format::Csv => self.render_csv(),
        };
        out.write_all(text.as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// SHA-256 of the canonical spec JSON (sorted keys, no whitespace).
pub fn spec_hash(d: &ClaimDistribution) -> String {
    let canonical = serde_json::to_string(&sort_keys(d.to_json())).unwrap();
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Floats become 17-significant-digit strings; objects get sorted keys.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => Value::String(format_f64(n.as_f64().unwrap())),
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(m) => sort_keys(Value::Object(
            m.into_iter().map(|(k, v)| (k, normalize(v))).collect(),
        )),
        other => other,
    }
}

/// Rebuilds objects in key order whatever map type `serde_json` was built with.
fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut entries: Vec<(String, Value)> = m.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(a) => Value::Array(a.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(&key(k), v, out);
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}
