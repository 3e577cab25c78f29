use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub command: String,
    /// sha256 of the canonical JSON of the resolved inputs.
    pub inputs_digest: String,
    pub outputs: BTreeMap<String, Value>,
    pub version: String,
    pub seed: u64,
}

/// Collects inputs and named outputs for one command.
#[derive(Debug, Default)]
pub struct Builder {
    inputs: BTreeMap<String, Value>,
    outputs: BTreeMap<String, Value>,
}

/// Non-finite values are not JSON numbers; they are written as strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect()))
            .collect(),
    )
}

impl Builder {
    pub fn input(&mut self, name: &str, v: impl Serialize) -> &mut Self {
        self.inputs.insert(
            name.into(),
            serde_json::to_value(v).expect("serializable input"),
        );
        self
    }

    pub fn out(&mut self, name: &str, v: Value) -> &mut Self {
        self.outputs.insert(name.into(), v);
        self
    }

    pub fn scalar(&mut self, name: &str, x: f64) -> &mut Self {
        self.out(name, num(x))
    }

    pub fn finish(self, command: &str, seed: u64) -> ResultRecord {
        // BTreeMap keys keep the canonical form ordered
        let canonical = serde_json::to_string(
            &json!({ "command": command, "inputs": self.inputs, "seed": seed }),
        )
        .expect("serializable inputs");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            write!(hex, "{b:02x}").unwrap();
        }
        ResultRecord {
            command: command.into(),
            inputs_digest: hex,
            outputs: self.outputs,
            version: TOOL_VERSION.into(),
            seed,
        }
    }
}

impl ResultRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable record")
    }

    /// Aligned two-column table; matrices get one row per line.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("command".into(), self.command.clone()),
            ("version".into(), self.version.clone()),
            ("seed".into(), self.seed.to_string()),
            ("inputs_digest".into(), self.inputs_digest.clone()),
        ];
        for (k, v) in &self.outputs {
            match v {
                Value::Array(items) if items.iter().all(Value::is_array) && !items.is_empty() => {
                    for (i, row) in items.iter().enumerate() {
                        let name = if i == 0 { k.clone() } else { String::new() };
                        rows.push((name, cells(row)));
                    }
                }
                Value::Array(_) => rows.push((k.clone(), cells(v))),
                Value::String(s) => rows.push((k.clone(), s.clone())),
                other => rows.push((k.clone(), other.to_string())),
            }
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            writeln!(out, "{k:<width$}  {v}").unwrap();
        }
        out
    }
}

fn cells(v: &Value) -> String {
    match v {
        Value::Array(xs) => xs
            .iter()
            .map(|x| match x {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            })
            .collect::<Vec<_>>()
            .join("  "),
        other => other.to_string(),
    }
}
