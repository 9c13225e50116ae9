//! Experiment records and their JSON or CSV rendering.

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Settings shared by every command, echoed into each record.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub samples: u64,
    pub tol: f64,
    pub tower_cap: u32,
    pub tail_k: u32,
    pub format: Format,
    pub decimal: bool,
}

/// A command's result: structured outputs, a flat table for CSV, and the exit code.
pub struct Outcome {
    pub outputs: Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub code: u8,
}

impl Outcome {
    pub fn new(outputs: Value, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Outcome {
        Outcome {
            outputs,
            header,
            rows,
            code: 0,
        }
    }

    pub fn with_code(mut self, code: u8) -> Outcome {
        self.code = code;
        self
    }
}

#[derive(Serialize)]
struct Record<'a> {
    command: &'a str,
    config: &'a RunConfig,
    inputs_digest: String,
    outputs: &'a Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<u128>,
}

/// SHA-256 over the command's inputs, each length-prefixed.
pub fn digest(inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for i in inputs {
        h.update((i.len() as u64).to_le_bytes());
        h.update(i);
    }
    format!("{:x}", h.finalize())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let fields: Vec<String> = r.iter().map(|f| csv_field(f)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn render(
    command: &str,
    config: &RunConfig,
    inputs: &[&[u8]],
    outcome: &Outcome,
    wall_time_ms: Option<u128>,
) -> String {
    match config.format {
        Format::Csv => csv(&outcome.header, &outcome.rows),
        Format::Json => {
            let record = Record {
                command,
                config,
                inputs_digest: digest(inputs),
                outputs: &outcome.outputs,
                wall_time_ms,
            };
            let mut s = serde_json::to_string_pretty(&record).expect("records serialize");
            s.push('\n');
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting() {
        let out = csv(&["a", "b"], &[vec!["1".into(), "x,y".into()]]);
        assert_eq!(out, "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn digest_separates_inputs() {
        assert_ne!(digest(&[b"ab", b"c"]), digest(&[b"a", b"bc"]));
        assert_eq!(digest(&[b"x"]).len(), 64);
    }
}
