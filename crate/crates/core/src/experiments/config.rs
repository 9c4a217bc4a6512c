//! Line-based `key=value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. A value is either a
//! scalar or a bracketed, comma-separated list such as `gamma=[0.2,0.5]`.
//! Floats accept `inf`; seeds accept decimal or `0x` hexadecimal.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ModelParams, DEFAULT_AMPLITUDE};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfigValue {
    Scalar(String),
    List(Vec<String>),
}

impl fmt::Display for ConfigValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigValue::Scalar(s) => f.write_str(s),
            ConfigValue::List(items) => write!(f, "[{}]", items.join(",")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, (usize, ConfigValue)>,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses a float, accepting `inf`.
pub fn parse_f64(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "Inf" | "infinity" => Some(f64::INFINITY),
        other => other.parse::<f64>().ok().filter(|x| !x.is_nan()),
    }
}

/// Parses a seed given in decimal or as `0x` hexadecimal.
pub fn parse_seed(s: &str) -> Option<u64> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| parse_error(line, format!("expected key=value, got `{body}`")))?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(parse_error(line, format!("invalid key `{key}`")));
            }
            let value = value.trim();
            let parsed = if let Some(inner) = value.strip_prefix('[') {
                let inner = inner
                    .strip_suffix(']')
                    .ok_or_else(|| parse_error(line, "unterminated list"))?;
                let items: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).collect();
                if items.iter().any(String::is_empty) {
                    return Err(parse_error(line, "empty list element"));
                }
                ConfigValue::List(items)
            } else if value.is_empty() {
                return Err(parse_error(line, format!("missing value for `{key}`")));
            } else {
                ConfigValue::Scalar(value.to_string())
            };
            if entries.insert(key.to_string(), (line, parsed)).is_some() {
                return Err(parse_error(line, format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Fails on the first key outside `allowed`.
    pub fn ensure_only(&self, allowed: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(parse_error(*line, format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }

    /// Canonical text form with keys in sorted order.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, (_, v))| format!("{k}={v}\n")).collect()
    }

    fn raw(&self, key: &str) -> Result<(usize, &ConfigValue)> {
        self.entries
            .get(key)
            .map(|(l, v)| (*l, v))
            .ok_or_else(|| parse_error(0, format!("missing key `{key}`")))
    }

    fn items<T>(&self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
        let (line, value) = self.raw(key)?;
        let items: Vec<&str> = match value {
            ConfigValue::Scalar(s) => vec![s.as_str()],
            ConfigValue::List(v) => v.iter().map(String::as_str).collect(),
        };
        items
            .into_iter()
            .map(|s| parse(s).ok_or_else(|| parse_error(line, format!("`{key}`: `{s}` is not {what}"))))
            .collect()
    }

    fn scalar<T>(&self, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<T> {
        let (line, value) = self.raw(key)?;
        match value {
            ConfigValue::Scalar(s) => parse(s).ok_or_else(|| parse_error(line, format!("`{key}`: `{s}` is not {what}"))),
            ConfigValue::List(_) => Err(parse_error(line, format!("`{key}` must be a single value"))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.scalar(key, "a number", parse_f64)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.contains(key) {
            self.f64(key)
        } else {
            Ok(default)
        }
    }

    /// A list of floats; a scalar counts as a one-element list.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.items(key, "a number", parse_f64)
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.scalar(key, "a nonnegative integer", |s| s.trim().parse().ok())
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        if self.contains(key) {
            self.usize(key)
        } else {
            Ok(default)
        }
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        self.items(key, "a nonnegative integer", |s| s.trim().parse().ok())
    }

    pub fn seed(&self, key: &str) -> Result<u64> {
        self.scalar(key, "a seed", parse_seed)
    }

    pub fn string(&self, key: &str) -> Result<String> {
        self.scalar(key, "text", |s| Some(s.to_string()))
    }

    /// Line on which `key` was set, if it was.
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|(l, _)| *l)
    }
}

/// Keys describing a model.
pub const MODEL_KEYS: [&str; 5] = ["d", "gamma", "beta", "delta", "a"];

/// Model parameters from the keys `d`, `gamma`, `delta` and the optional
/// `beta` (default `1 - gamma`) and `a`.
pub fn model_params(cfg: &Config) -> Result<ModelParams> {
    let gamma = cfg.f64("gamma")?;
    let params = ModelParams::new(
        cfg.usize("d")?,
        gamma,
        cfg.f64_or("beta", 1.0 - gamma)?,
        cfg.f64("delta")?,
        cfg.f64_or("a", DEFAULT_AMPLITUDE)?,
    );
    params.map_err(|e| parse_error(cfg.line_of("gamma").unwrap_or(0), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalars_lists_and_comments() {
        let cfg = Config::parse("# model\nd=1\ngamma=[0.2, 0.5,0.8]\n\ndelta=inf\nseed=0x1F\n").unwrap();
        assert_eq!(cfg.usize("d").unwrap(), 1);
        assert_eq!(cfg.f64_list("gamma").unwrap(), vec![0.2, 0.5, 0.8]);
        assert_eq!(cfg.f64_list("d").unwrap(), vec![1.0]);
        assert!(cfg.f64("delta").unwrap().is_infinite());
        assert_eq!(cfg.seed("seed").unwrap(), 31);
        assert!(cfg.f64("gamma").is_err());
        assert_eq!(parse_seed("42"), Some(42));
        assert_eq!(parse_seed("0xg"), None);
    }

    #[test]
    fn reports_offending_lines() {
        for (text, line) in [("d=1\nnonsense\n", 2), ("d=1\nd=2\n", 2), ("x=[1,2\n", 1), ("\n\ng=[1,,2]", 3)] {
            match Config::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        let cfg = Config::parse("d=1\ngamma=abc\n").unwrap();
        assert!(matches!(cfg.f64("gamma"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(cfg.ensure_only(&["d"]), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn model_from_config() {
        let p = model_params(&Config::parse("d=2\ngamma=0.4\ndelta=3\n").unwrap()).unwrap();
        assert_eq!((p.d(), p.beta(), p.a()), (2, 0.6, DEFAULT_AMPLITUDE));
        assert!(model_params(&Config::parse("d=2\ngamma=1.4\ndelta=3\n").unwrap()).is_err());
        let c = Config::parse("gamma=[1,2]\nd=3\n").unwrap();
        assert_eq!(c.canonical(), "d=3\ngamma=[1,2]\n");
    }
}
