use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nonuniperc_core::Family;
use serde_json::{json, Value};
use toml::Value as Toml;

use crate::experiments::Experiment;

/// Configuration problems; always exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

fn bad<T>(msg: impl Into<String>) -> ConfigResult<T> {
    Err(ConfigError(msg.into()))
}

/// Flattened dotted-key view of a config file. Every typed read records the
/// resolved value, defaults included, and marks the key as consumed so that
/// leftovers can be rejected.
pub struct Keys {
    raw: BTreeMap<String, Toml>,
    used: BTreeSet<String>,
    resolved: BTreeMap<String, Value>,
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Toml>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Toml::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn to_json(v: &Toml) -> Value {
    match v {
        Toml::String(s) => json!(s),
        Toml::Integer(i) => json!(i),
        Toml::Float(f) => json!(f),
        Toml::Boolean(b) => json!(b),
        Toml::Datetime(d) => json!(d.to_string()),
        Toml::Array(a) => Value::Array(a.iter().map(to_json).collect()),
        Toml::Table(t) => Value::Object(t.iter().map(|(k, v)| (k.clone(), to_json(v))).collect()),
    }
}

impl Keys {
    pub fn parse(text: &str) -> ConfigResult<Keys> {
        let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError(format!("config is not valid TOML: {e}")))?;
        let mut raw = BTreeMap::new();
        flatten("", &table, &mut raw);
        Ok(Keys { raw, used: BTreeSet::new(), resolved: BTreeMap::new() })
    }

    fn take(&mut self, key: &str) -> Option<Toml> {
        self.used.insert(key.to_string());
        self.raw.get(key).cloned()
    }

    fn record(&mut self, key: &str, v: Value) {
        self.resolved.insert(key.to_string(), v);
    }

    pub fn has(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }

    pub fn string(&mut self, key: &str, default: Option<&str>) -> ConfigResult<String> {
        let s = match (self.take(key), default) {
            (Some(Toml::String(s)), _) => s,
            (Some(other), _) => return bad(format!("`{key}` must be a string, got {other}")),
            (None, Some(d)) => d.to_string(),
            (None, None) => return bad(format!("missing required key `{key}`")),
        };
        self.record(key, json!(s));
        Ok(s)
    }

    pub fn parsed<T: FromStr>(&mut self, key: &str, default: Option<&str>) -> ConfigResult<T>
    where
        T::Err: std::fmt::Display,
    {
        let s = self.string(key, default)?;
        s.parse().map_err(|e| ConfigError(format!("`{key}`: {e}")))
    }

    fn integer(&mut self, key: &str, default: Option<i64>) -> ConfigResult<i64> {
        let i = match (self.take(key), default) {
            (Some(Toml::Integer(i)), _) => i,
            (Some(other), _) => return bad(format!("`{key}` must be an integer, got {other}")),
            (None, Some(d)) => d,
            (None, None) => return bad(format!("missing required key `{key}`")),
        };
        self.record(key, json!(i));
        Ok(i)
    }

    /// Strictly positive integer.
    pub fn positive(&mut self, key: &str, default: Option<u64>) -> ConfigResult<u64> {
        let i = self.integer(key, default.map(|d| d as i64))?;
        if i <= 0 {
            return bad(format!("`{key}` must be positive, got {i}"));
        }
        Ok(i as u64)
    }

    pub fn nonnegative(&mut self, key: &str, default: Option<u64>) -> ConfigResult<u64> {
        let i = self.integer(key, default.map(|d| d as i64))?;
        if i < 0 {
            return bad(format!("`{key}` must be nonnegative, got {i}"));
        }
        Ok(i as u64)
    }

    /// A 64-bit seed. TOML integers are signed, so large seeds may also be
    /// given as decimal or `0x` strings.
    pub fn seed(&mut self, key: &str) -> ConfigResult<u64> {
        let v = match self.take(key) {
            Some(Toml::Integer(i)) if i >= 0 => i as u64,
            Some(Toml::String(s)) => {
                let t = s.trim();
                let r = match t.strip_prefix("0x") {
                    Some(hex) => u64::from_str_radix(hex, 16),
                    None => t.parse(),
                };
                r.map_err(|_| ConfigError(format!("`{key}` is not a 64-bit unsigned value: {s:?}")))?
            }
            Some(other) => return bad(format!("`{key}` must be a nonnegative integer or string, got {other}")),
            None => return bad(format!("missing required key `{key}`")),
        };
        self.record(key, json!(v.to_string()));
        Ok(v)
    }

    fn number(v: &Toml) -> Option<f64> {
        match v {
            Toml::Float(f) => Some(*f),
            Toml::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn float(&mut self, key: &str, default: Option<f64>) -> ConfigResult<f64> {
        let f = match (self.take(key), default) {
            (Some(v), _) => Self::number(&v).ok_or_else(|| ConfigError(format!("`{key}` must be a number, got {v}")))?,
            (None, Some(d)) => d,
            (None, None) => return bad(format!("missing required key `{key}`")),
        };
        if !f.is_finite() {
            return bad(format!("`{key}` must be finite"));
        }
        self.record(key, json!(f));
        Ok(f)
    }

    pub fn opt_float(&mut self, key: &str) -> ConfigResult<Option<f64>> {
        if self.has(key) {
            self.float(key, None).map(Some)
        } else {
            self.used.insert(key.to_string());
            Ok(None)
        }
    }

    pub fn boolean(&mut self, key: &str, default: bool) -> ConfigResult<bool> {
        let b = match self.take(key) {
            Some(Toml::Boolean(b)) => b,
            Some(other) => return bad(format!("`{key}` must be a boolean, got {other}")),
            None => default,
        };
        self.record(key, json!(b));
        Ok(b)
    }

    fn array(&mut self, key: &str) -> ConfigResult<Option<Vec<Toml>>> {
        match self.take(key) {
            Some(Toml::Array(a)) => Ok(Some(a)),
            Some(other) => bad(format!("`{key}` must be an array, got {other}")),
            None => Ok(None),
        }
    }

    pub fn floats(&mut self, key: &str, default: &[f64]) -> ConfigResult<Vec<f64>> {
        let out = match self.array(key)? {
            Some(a) => a
                .iter()
                .map(|v| Self::number(v).ok_or_else(|| ConfigError(format!("`{key}` entries must be numbers"))))
                .collect::<ConfigResult<Vec<f64>>>()?,
            None => default.to_vec(),
        };
        self.record(key, json!(out));
        Ok(out)
    }

    pub fn positives(&mut self, key: &str, default: &[u64]) -> ConfigResult<Vec<u64>> {
        let out = match self.array(key)? {
            Some(a) => a
                .iter()
                .map(|v| match v {
                    Toml::Integer(i) if *i > 0 => Ok(*i as u64),
                    _ => bad(format!("`{key}` entries must be positive integers")),
                })
                .collect::<ConfigResult<Vec<u64>>>()?,
            None => default.to_vec(),
        };
        self.record(key, json!(out));
        Ok(out)
    }

    pub fn strings(&mut self, key: &str, default: &[&str]) -> ConfigResult<Vec<String>> {
        let out = match self.array(key)? {
            Some(a) => a
                .iter()
                .map(|v| match v {
                    Toml::String(s) => Ok(s.clone()),
                    _ => bad(format!("`{key}` entries must be strings")),
                })
                .collect::<ConfigResult<Vec<String>>>()?,
            None => default.iter().map(|s| s.to_string()).collect(),
        };
        self.record(key, json!(out));
        Ok(out)
    }

    /// Keys present in the file that no reader asked for.
    pub fn leftovers(&self) -> Vec<String> {
        self.raw.keys().filter(|k| !self.used.contains(*k)).cloned().collect()
    }

    pub fn resolved(&self) -> Value {
        Value::Object(self.resolved.iter().map(|(k, v)| (k.clone(), v.clone())).collect())
    }

    pub fn raw_json(&self) -> Value {
        Value::Object(self.raw.iter().map(|(k, v)| (k.clone(), to_json(v))).collect())
    }
}

/// Keys shared by every experiment.
#[derive(Clone, Debug)]
pub struct Common {
    pub experiment: Experiment,
    pub family: Family,
    pub radius: u32,
    pub seed: u64,
    pub workers: Option<usize>,
    pub output_dir: PathBuf,
    pub vertex_cap: usize,
    pub replicas: u64,
}

pub const OUT_ENV: &str = "NONUNIPERC_OUT";

impl Common {
    pub fn read(keys: &mut Keys) -> ConfigResult<Common> {
        let name = keys.string("experiment", None)?;
        let experiment = Experiment::from_str(&name).map_err(ConfigError)?;
        let family: Family = keys.parsed("family", None)?;
        let radius = keys.positive("radius", None)?;
        if radius > 64 {
            return bad(format!("`radius` {radius} is unreasonably large"));
        }
        let seed = keys.seed("seed")?;
        let workers = if keys.has("workers") { Some(keys.positive("workers", None)? as usize) } else { None };
        let dir = keys.string("output.dir", Some("out"))?;
        let vertex_cap = keys.positive("budget.vertex_cap", Some(nonuniperc_core::truncation::DEFAULT_VERTEX_BUDGET as u64))? as usize;
        let replicas = keys.positive("budget.replicas", Some(2000))?;
        Ok(Common {
            experiment,
            family,
            radius: radius as u32,
            seed,
            workers,
            output_dir: resolve_output(&dir),
            vertex_cap,
            replicas,
        })
    }
}

/// The environment override replaces the configured root.
fn resolve_output(configured: &str) -> PathBuf {
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => Path::new(configured).to_path_buf(),
    }
}
