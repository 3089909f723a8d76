//! File loaders. Each accepts either the bare artifact or a report whose
//! `result` carries it, so one command's `--out` feeds the next.

use std::path::Path;

use mg_core::fuchsian::{FormBasis, LogarithmicConnection};
use mg_core::gate::{parse_gate, QuantumGate};
use mg_core::lappo::RepresentationFamily;
use mg_core::paths::{LoopSet, PiecewisePath};
use mg_core::CMatrix;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

use crate::report::CliError;

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{} is not valid JSON: {e}", path.display())))
}

/// `v[key]`, or `v.result[key]` for reports.
fn field<'a>(v: &'a Value, key: &str) -> Option<&'a Value> {
    v.get(key)
        .or_else(|| v.get("result").and_then(|r| r.get(key)))
}

fn decode<T: DeserializeOwned>(v: Value, what: &str, path: &Path) -> Result<T, CliError> {
    serde_json::from_value(v)
        .map_err(|e| CliError::Validation(format!("{}: bad {what}: {e}", path.display())))
}

fn unwrap_result(v: Value) -> Value {
    match v {
        Value::Object(mut m) if m.contains_key("command") && m.contains_key("result") => {
            m.remove("result").unwrap_or(Value::Null)
        }
        other => other,
    }
}

pub fn load_connection(path: &Path) -> Result<LogarithmicConnection, CliError> {
    let v = unwrap_result(read_json(path)?);
    let v = field(&v, "connection").cloned().unwrap_or(v);
    decode(v, "connection", path)
}

pub fn load_loops(path: &Path) -> Result<Vec<PiecewisePath>, CliError> {
    let v = read_json(path)?;
    if let Some(l) = field(&v, "loops") {
        let set: Vec<PiecewisePath> = decode(l.clone(), "loop list", path)?;
        return Ok(LoopSet::new(set)?.loops);
    }
    if let Some(p) = field(&v, "path") {
        let p: PiecewisePath = decode(p.clone(), "path", path)?;
        return Ok(LoopSet::new(vec![p])?.loops);
    }
    Err(CliError::Validation(format!(
        "{}: expected a \"loops\" list",
        path.display()
    )))
}

pub fn load_matrix(path: &Path) -> Result<CMatrix, CliError> {
    let v = unwrap_result(read_json(path)?);
    let v = field(&v, "matrix").cloned().unwrap_or(v);
    decode(v, "matrix", path)
}

/// A target family together with the forms its synthesis lives on.
#[derive(Deserialize)]
pub struct TargetsFile {
    #[serde(flatten)]
    pub family: RepresentationFamily,
    pub forms: FormBasis,
}

pub fn load_targets(path: &Path) -> Result<TargetsFile, CliError> {
    decode(unwrap_result(read_json(path)?), "target family", path)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GateEntry {
    Name(String),
    Matrix(CMatrix),
}

/// `{"gates": [...], "labels": [...]?}`; entries are gate names or matrices.
pub fn load_gates(path: &Path, unitarity_tol: f64) -> Result<(Vec<String>, Vec<QuantumGate>), CliError> {
    let v = read_json(path)?;
    let list = field(&v, "gates")
        .ok_or_else(|| CliError::Validation(format!("{}: expected a \"gates\" list", path.display())))?;
    let entries: Vec<GateEntry> = decode(list.clone(), "gate list", path)?;
    let labels: Option<Vec<String>> = match field(&v, "labels") {
        Some(l) => Some(decode(l.clone(), "label list", path)?),
        None => None,
    };
    let mut names = Vec::with_capacity(entries.len());
    let mut gates = Vec::with_capacity(entries.len());
    for (k, e) in entries.into_iter().enumerate() {
        match e {
            GateEntry::Name(s) => {
                gates.push(parse_gate(&s)?);
                names.push(s);
            }
            GateEntry::Matrix(m) => {
                gates.push(QuantumGate::with_tolerance(m, unitarity_tol)?);
                names.push(format!("g{}", k + 1));
            }
        }
    }
    if let Some(l) = labels {
        if l.len() != names.len() {
            return Err(CliError::Validation(format!(
                "{}: {} labels for {} gates",
                path.display(),
                l.len(),
                names.len()
            )));
        }
        names = l;
    }
    Ok((names, gates))
}
