//! Configuration-file loading and flag/file/default merging.
//!
//! Precedence: command-line flags override `key = value` lines from the
//! `--config` file, which override built-in defaults. Keys are
//! case-insensitive and `-`/`_` are interchangeable.

use std::collections::HashMap;
use std::path::Path;

use gexpect::pde::Accuracy;
use gexpect::phi::{catalog, Functional};
use gexpect::{Error, Functional64, IntegrandSpec64, Result};

fn norm_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// Parsed `key = value` file; `#` starts a comment.
#[derive(Debug, Default)]
pub struct FileConfig {
    map: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut map = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(format!(
                    "config line {} is not 'key = value': '{raw}'",
                    lineno + 1
                )));
            };
            map.insert(norm_key(key), value.trim().to_string());
        }
        Ok(Self { map })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(&norm_key(key)).map(String::as_str)
    }
}

/// Flag value, else config-file value, else default.
pub fn merge<T>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
    parse: impl FnOnce(&str) -> Result<T>,
    default: T,
) -> Result<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file.get(key) {
        Some(raw) => parse(raw).map_err(|e| Error::config(format!("config key '{key}': {e}"))),
        None => Ok(default),
    }
}

/// As [`merge`], for settings with no built-in default.
pub fn merge_opt<T>(
    flag: Option<T>,
    file: &FileConfig,
    key: &str,
    parse: impl FnOnce(&str) -> Result<T>,
) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match file.get(key) {
        Some(raw) => parse(raw)
            .map(Some)
            .map_err(|e| Error::config(format!("config key '{key}': {e}"))),
        None => Ok(None),
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("expected a number, got '{s}'")))
}

pub fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("expected a non-negative integer, got '{s}'")))
}

pub fn parse_u64(s: &str) -> Result<u64> {
    s.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("expected a non-negative integer, got '{s}'")))
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(parse_f64)
        .collect::<Result<Vec<_>>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(Error::invalid("empty list"))
            } else {
                Ok(v)
            }
        })
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',').map(parse_usize).collect()
}

/// Two variances, space- or comma-separated.
pub fn parse_sigma2_pair(s: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|p| !p.is_empty())
        .collect();
    if parts.len() != 2 {
        return Err(Error::invalid(format!(
            "--sigma2 takes two variances MIN MAX, got '{s}'"
        )));
    }
    Ok((parse_f64(parts[0])?, parse_f64(parts[1])?))
}

/// `const:<v>` or `steps:v0,v1,...`.
pub fn parse_h(s: &str) -> Result<IntegrandSpec64> {
    if let Some(v) = s.strip_prefix("const:") {
        return Ok(IntegrandSpec64::Constant(parse_f64(v)?));
    }
    if let Some(list) = s.strip_prefix("steps:") {
        return Ok(IntegrandSpec64::PiecewiseConstant(parse_f64_list(list)?));
    }
    Err(Error::invalid(format!(
        "--h must be 'const:<v>' or 'steps:v0,v1,...', got '{s}'"
    )))
}

pub fn parse_accuracy(s: &str) -> Result<Accuracy> {
    Accuracy::parse(s.trim())
}

/// A catalog name, or an expression parsed with the given arity and bound.
pub fn resolve_phi(
    spec: &str,
    arity: Option<usize>,
    bound: Option<f64>,
    default_arity: usize,
) -> Result<Functional64> {
    if let Some(f) = catalog::<f64>(spec.trim()) {
        return Ok(f);
    }
    Functional::parse(spec, arity.unwrap_or(default_arity), bound.unwrap_or(10.0))
}
