//! Resolved run configuration and flag parsing helpers.

use std::path::PathBuf;

use clap::ValueEnum;
use mg_core::matrix::ComplexRepr;
use mg_core::C64;
use serde::Serialize;

use crate::report::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Text,
}

/// Everything a report needs to be reproduced.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    /// Local error tolerance of the transport integrator.
    pub tol: f64,
    pub unitarity_tol: f64,
    /// Braid, flatness and group-relation checks.
    pub relation_tol: f64,
    /// Forward monodromy against synthesis targets.
    pub match_tol: f64,
    pub order: usize,
    pub lambda: ComplexRepr,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [
            ("tol", self.tol),
            ("unitarity-tol", self.unitarity_tol),
            ("relation-tol", self.relation_tol),
            ("match-tol", self.match_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Validation(format!("--{name} must be positive, got {v}")));
            }
        }
        if self.order == 0 {
            return Err(CliError::Validation("--order must be at least 1".into()));
        }
        if !(self.lambda.re.is_finite() && self.lambda.im.is_finite()) {
            return Err(CliError::Validation("--lambda must be finite".into()));
        }
        Ok(())
    }

    pub fn lambda(&self) -> C64 {
        self.lambda.into()
    }
}

/// Parses `3`, `-0.5i`, `3+1i`, `1e-2-2.5e-1i`.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse {s:?} as a complex number");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |p: &str| -> Result<f64, String> {
        match p {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => p.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => {
            let re = body[..k].parse::<f64>().map_err(|_| bad())?;
            Ok(C64::new(re, imag(&body[k..])?))
        }
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

/// Comma-separated complex numbers.
pub fn parse_complex_list(s: &str) -> Result<Vec<C64>, String> {
    s.split(',').map(parse_complex).collect()
}

/// `MG_NUM_THREADS`, when set, must be a positive integer.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("MG_NUM_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Validation(format!(
                "MG_NUM_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("3").unwrap(), C64::new(3.0, 0.0));
        assert_eq!(parse_complex("3+1i").unwrap(), C64::new(3.0, 1.0));
        assert_eq!(parse_complex(" -2 - 0.5i ").unwrap(), C64::new(-2.0, -0.5));
        assert_eq!(parse_complex("i").unwrap(), C64::new(0.0, 1.0));
        assert_eq!(parse_complex("-i").unwrap(), C64::new(0.0, -1.0));
        assert_eq!(parse_complex("0.25i").unwrap(), C64::new(0.0, 0.25));
        assert_eq!(parse_complex("1e-2-2.5e-1i").unwrap(), C64::new(0.01, -0.25));
        assert_eq!(parse_complex("-1e+2").unwrap(), C64::new(-100.0, 0.0));
        assert_eq!(parse_complex("1+i").unwrap(), C64::new(1.0, 1.0));
        for bad in ["", "abc", "1+2j", "1++2i", "3x"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn complex_lists() {
        let v = parse_complex_list("0,1,0.5-1i").unwrap();
        assert_eq!(v, vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.5, -1.0)]);
    }
}
