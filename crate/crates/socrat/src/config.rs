//! Run configuration. Each setting is taken from the first source that has
//! it: command-line flag, `SOCRAT_*` environment variable (both handled by
//! the argument parser), `key = value` config file, built-in default.
//!
//! Config file keys are the long flag names; `_` and `-` are interchangeable.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use socrat_core::PartitionConfig;

use crate::error::{read_file, AppError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    origin: String,
    values: BTreeMap<String, (usize, String)>,
}

fn normalize_key(k: &str) -> String {
    k.trim().replace('_', "-")
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?, &path.display().to_string())
    }

    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| AppError::parse(origin, no + 1, "expected key = value"))?;
            let key = normalize_key(k);
            if key.is_empty() {
                return Err(AppError::parse(origin, no + 1, "empty key"));
            }
            values.insert(key, (no + 1, v.trim().to_string()));
        }
        Ok(ConfigFile { origin: origin.to_string(), values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| AppError::parse(&self.origin, *line, format!("{key}: {e}"))),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// Merges flag values with the config file and records every resolved
/// setting for provenance.
#[derive(Debug, Clone, Default)]
pub struct Resolver {
    file: ConfigFile,
    resolved: BTreeMap<String, String>,
}

impl Resolver {
    pub fn new(file: Option<ConfigFile>) -> Self {
        Resolver { file: file.unwrap_or_default(), resolved: BTreeMap::new() }
    }

    pub fn from_path(path: Option<&Path>) -> Result<Self> {
        let mut r = Self::new(path.map(ConfigFile::load).transpose()?);
        if let Some(p) = path {
            r.resolved.insert("config".into(), p.display().to_string());
        }
        Ok(r)
    }

    /// The value for `key`, or `None` when neither the flag nor the file has one.
    pub fn opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file.get(key)?,
        };
        if let Some(v) = &v {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    pub fn value<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        let v = self.opt(key, flag)?.unwrap_or(default);
        self.resolved.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn required<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T>
    where
        T::Err: Display,
    {
        self.opt(key, flag)?.ok_or_else(|| AppError::Usage(format!("--{key} is required")))
    }

    /// Records a derived setting that has no flag of its own.
    pub fn note(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }

    pub fn into_resolved(self) -> BTreeMap<String, String> {
        self.resolved
    }
}

/// Partition settings given explicitly; the rest follow
/// [`PartitionConfig::defaults_for`] the graph at hand.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PartitionOverrides {
    pub k: Option<usize>,
    pub gamma: Option<f64>,
    pub abs_gap_tol: Option<f64>,
    pub time_limit_secs: Option<f64>,
    pub u_min: Option<usize>,
    pub u_max: Option<usize>,
    pub v_min: Option<usize>,
    pub v_max: Option<usize>,
}

impl PartitionOverrides {
    pub fn resolve(&self, nx: usize, ny: usize) -> PartitionConfig {
        let mut cfg = match self.k {
            Some(k) => PartitionConfig::with_k(nx, ny, k),
            None => PartitionConfig::defaults_for(nx, ny),
        };
        cfg.gamma = self.gamma.unwrap_or(cfg.gamma);
        cfg.abs_gap_tol = self.abs_gap_tol.unwrap_or(cfg.abs_gap_tol);
        cfg.time_limit_secs = self.time_limit_secs.unwrap_or(cfg.time_limit_secs);
        cfg.c_u_min = self.u_min.unwrap_or(cfg.c_u_min);
        cfg.c_u_max = self.u_max.unwrap_or(cfg.c_u_max);
        cfg.c_v_min = self.v_min.unwrap_or(cfg.c_v_min);
        cfg.c_v_max = self.v_max.unwrap_or(cfg.c_v_max);
        cfg
    }
}

/// `"N"` means seeds `0..N`; a comma-separated list is taken literally.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || AppError::Usage(format!("--seeds {s:?}: expected a count or a comma-separated list"));
    let s = s.trim();
    if s.contains(',') {
        return s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect();
    }
    let n: u64 = s.parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    Ok((0..n).collect())
}

/// Comma-separated positive integers; empty is a usage error.
pub fn parse_n_grid(s: &str) -> Result<Vec<usize>> {
    let bad = || AppError::Usage(format!("--n-grid {s:?}: expected comma-separated positive integers"));
    let grid: Vec<usize> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    if grid.is_empty() || grid.contains(&0) {
        return Err(bad());
    }
    Ok(grid)
}
