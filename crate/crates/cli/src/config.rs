//! Flat `key = value` configuration.
//!
//! One pair per line; blank lines and lines starting with `#` are ignored, as
//! is anything after ` #` on a value line. Keys are case-insensitive, `_` and
//! `-` are interchangeable and a trailing `-grid` is dropped, so `eta_T`,
//! `eta-t` and `eta-t-grid` all name the same key.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{CliError, CliResult};

/// Longest accepted key or value, to keep hostile input cheap.
const MAX_FIELD: usize = 4096;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

pub fn normalize_key(raw: &str) -> String {
    let mut key = raw.trim().to_ascii_lowercase().replace('_', "-");
    // strip repeatedly so that normalizing twice changes nothing
    while let Some(stem) = key.strip_suffix("-grid").filter(|s| !s.is_empty()) {
        key = stem.to_string();
    }
    key
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.len() <= 64
        && key.starts_with(|c: char| c.is_ascii_lowercase())
        && key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-')
}

impl Config {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize_key(key)).map(String::as_str)
    }

    /// Insert a new key; fails if it is already present.
    pub fn insert(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = checked_key(key, 0)?;
        let value = checked_value(value, 0)?;
        if self.entries.contains_key(&key) {
            return Err(CliError::DuplicateKey(key));
        }
        self.entries.insert(key, value);
        Ok(())
    }

    /// Insert or replace.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let key = checked_key(key, 0)?;
        let value = checked_value(value, 0)?;
        self.entries.insert(key, value);
        Ok(())
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(&normalize_key(key))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn checked_key(raw: &str, line: usize) -> CliResult<String> {
    let key = normalize_key(raw);
    if !valid_key(&key) {
        return Err(CliError::Syntax {
            line,
            message: format!("invalid key {raw:?}"),
        });
    }
    Ok(key)
}

fn checked_value(raw: &str, line: usize) -> CliResult<String> {
    let value = raw.trim();
    if value.is_empty() || value.len() > MAX_FIELD || value.contains(['\n', '\r', '#']) {
        return Err(CliError::Syntax {
            line,
            message: format!("invalid value {raw:?}"),
        });
    }
    Ok(value.to_string())
}

/// Parse the config dialect. Line numbers in errors start at 1.
pub fn parse_config(text: &str) -> CliResult<Config> {
    let mut config = Config::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find(" #").or_else(|| raw.find("\t#")) {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| CliError::Syntax {
            line: line_no,
            message: "expected `key = value`".into(),
        })?;
        let key = checked_key(key, line_no)?;
        let value = checked_value(value, line_no)?;
        if config.entries.contains_key(&key) {
            return Err(CliError::DuplicateKey(key));
        }
        config.entries.insert(key, value);
    }
    Ok(config)
}

/// Parse `--key value` / `--key=value` pairs from the command line.
pub fn parse_flag_pairs(args: &[String]) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let body = arg
            .strip_prefix("--")
            .ok_or_else(|| CliError::Usage(format!("expected a --key, found {arg:?}")))?;
        let (key, value) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let value = iter
                    .next()
                    .ok_or_else(|| CliError::Usage(format!("--{body} needs a value")))?;
                (body.to_string(), value.clone())
            }
        };
        out.push((key, value));
    }
    Ok(out)
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
