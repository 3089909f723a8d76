//! The single report format shared by every subcommand.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::config::{Format, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<mg_core::Error> for CliError {
    fn from(e: mg_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Deviation {
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    pub deviations: BTreeMap<String, Deviation>,
    pub warnings: Vec<String>,
    pub result: Value,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            config: config.clone(),
            verdict: None,
            deviations: BTreeMap::new(),
            warnings: Vec::new(),
            result: Value::Null,
        }
    }

    pub fn check(&mut self, name: &str, value: f64, tol: f64) {
        self.deviations.insert(
            name.to_string(),
            Deviation {
                value,
                tol,
                pass: value <= tol,
            },
        );
    }

    pub fn set_result<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        self.result = to_value(value)?;
        Ok(())
    }

    pub fn passes(&self) -> bool {
        self.deviations.values().all(|d| d.pass)
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => serde_json::to_string_pretty(self)
                .map(|s| s + "\n")
                .map_err(|e| CliError::Numerical(format!("cannot serialize report: {e}"))),
            Format::Text => Ok(self.render_text()),
        }
    }

    fn render_text(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        let _ = writeln!(s, "command: {}", self.command);
        if let Some(v) = &self.verdict {
            let _ = writeln!(s, "verdict: {v}");
        }
        let _ = writeln!(
            s,
            "config: tol={:e} unitarity_tol={:e} relation_tol={:e} match_tol={:e} order={} lambda={}{:+}i seed={}",
            c.tol, c.unitarity_tol, c.relation_tol, c.match_tol, c.order, c.lambda.re, c.lambda.im, c.seed
        );
        if !self.deviations.is_empty() {
            let _ = writeln!(s, "deviations:");
            let width = self.deviations.keys().map(String::len).max().unwrap_or(0);
            for (name, d) in &self.deviations {
                let _ = writeln!(
                    s,
                    "  {name:<width$}  {:.3e}  (tol {:.1e})  {}",
                    d.value,
                    d.tol,
                    if d.pass { "ok" } else { "FAIL" }
                );
            }
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        if let Value::Object(map) = &self.result {
            let _ = writeln!(s, "result:");
            for (k, v) in map {
                write_field(&mut s, k, v, 1);
            }
        }
        s
    }
}

/// Nested objects are expanded two levels deep; the rest is summarized.
fn write_field(s: &mut String, key: &str, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(o) if depth < 3 && !is_matrix(v) => {
            let _ = writeln!(s, "{pad}{key}:");
            for (k, inner) in o {
                write_field(s, k, inner, depth + 1);
            }
        }
        _ => {
            let _ = writeln!(s, "{pad}{key}: {}", summarize(v));
        }
    }
}

fn is_matrix(v: &Value) -> bool {
    v.get("dim").is_some() && v.get("entries").is_some()
}

/// Scalars in full, containers by size.
fn summarize(v: &Value) -> String {
    match v {
        Value::Array(a) => format!("[{} entries]", a.len()),
        Value::Object(o) if is_matrix(v) => format!("{}x{0} matrix", o["dim"]),
        Value::Object(o) => format!("{{{} fields}}", o.len()),
        other => other.to_string(),
    }
}

pub fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Numerical(format!("cannot serialize result: {e}")))
}
