//! Layered settings: command-line flag, then config file, then default.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{Context, Result};
use ecp_esn::reservoir::parse_kv;

/// Flat `key = value` file; keys are the long flag names without dashes.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let values = parse_kv(text)?
            .into_iter()
            .map(|(k, v)| (k.replace('_', "-"), v))
            .collect();
        Ok(Self { values })
    }

    /// The flag if given, else the config value, else `None`.
    pub fn lookup<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key '{key}' = '{raw}': {e}")),
            None => Ok(None),
        }
    }

    pub fn get<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.lookup(flag, key)?.unwrap_or(default))
    }
}

/// Comma-separated list of numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let values = s
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| v.parse::<f64>().map_err(|e| format!("'{v}': {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err("empty grid".into());
        }
        Ok(Grid(values))
    }
}
