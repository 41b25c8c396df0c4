//! Experiment configuration: typed keys, a flat `key = value` file format,
//! and flag/file/environment resolution with provenance.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Environment variable consulted for the seed when neither a flag nor the
/// config file sets it.
pub const SEED_ENV: &str = "QAL_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyKind {
    UInt,
    Real,
    RealList,
    /// One of a fixed set of names.
    Choice(&'static [&'static str]),
    /// Free text checked by the command (map and potential specs).
    Text,
}

impl KeyKind {
    pub fn describe(&self) -> String {
        match self {
            Self::UInt => "a non-negative integer".into(),
            Self::Real => "a real number".into(),
            Self::RealList => "a comma-separated list of reals".into(),
            Self::Choice(names) => format!("one of {}", names.join(", ")),
            Self::Text => "text".into(),
        }
    }

    pub fn value_name(&self) -> &'static str {
        match self {
            Self::UInt => "INT",
            Self::Real => "REAL",
            Self::RealList => "LIST",
            Self::Choice(_) => "NAME",
            Self::Text => "SPEC",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: KeyKind,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    UInt(u64),
    Real(f64),
    RealList(Vec<f64>),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UInt(v) => write!(f, "{v}"),
            Self::Real(v) => write!(f, "{v:?}"),
            Self::RealList(vs) => {
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v:?}")?;
                }
                Ok(())
            }
            Self::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Default,
    File,
    Flag,
    Env,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Default => "default",
            Self::File => "file",
            Self::Flag => "flag",
            Self::Env => "env",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("key `{key}`: expected {expected}, got `{raw}`{detail}")]
    BadValue {
        key: String,
        expected: String,
        raw: String,
        detail: String,
    },
    #[error("unknown key `{key}` for command {command}")]
    UnknownKey { key: String, command: String },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config line {line}: key `{key}` appears twice")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(String),
    #[error("key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    pub fn invalid(key: &str, message: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

fn bad(spec: &KeySpec, raw: &str, detail: &str) -> ConfigError {
    ConfigError::BadValue {
        key: spec.name.to_string(),
        expected: spec.kind.describe(),
        raw: raw.to_string(),
        detail: if detail.is_empty() {
            String::new()
        } else {
            format!(" ({detail})")
        },
    }
}

pub fn parse_value(spec: &KeySpec, raw: &str) -> Result<Value, ConfigError> {
    let t = raw.trim();
    match spec.kind {
        KeyKind::UInt => t.parse().map(Value::UInt).map_err(|_| bad(spec, raw, "")),
        KeyKind::Real => match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Value::Real(v)),
            _ => Err(bad(spec, raw, "")),
        },
        KeyKind::RealList => {
            if t.is_empty() {
                return Err(bad(spec, raw, "empty list"));
            }
            let parts: Vec<&str> = t.split(',').collect();
            if parts.last().is_some_and(|p| p.trim().is_empty()) {
                return Err(bad(spec, raw, "trailing separator"));
            }
            parts
                .iter()
                .map(|p| match p.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(bad(spec, raw, &format!("bad element `{}`", p.trim()))),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Value::RealList)
        }
        KeyKind::Choice(names) => names
            .iter()
            .find(|n| n.eq_ignore_ascii_case(t))
            .map(|n| Value::Text(n.to_string()))
            .ok_or_else(|| bad(spec, raw, "")),
        KeyKind::Text => {
            if t.is_empty() {
                Err(bad(spec, raw, "empty"))
            } else {
                Ok(Value::Text(t.to_string()))
            }
        }
    }
}

/// Parse a flat `key = value` file. `#` starts a comment; blank lines are
/// ignored. Keys are returned with their line numbers, unvalidated.
pub fn parse_file(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: line_no,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: line_no,
                message: "empty key".into(),
            });
        }
        if out.iter().any(|(_, k, _)| k == key) {
            return Err(ConfigError::Duplicate {
                line: line_no,
                key: key.to_string(),
            });
        }
        out.push((line_no, key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: String,
    pub values: BTreeMap<String, (Value, Provenance)>,
    pub seed: u64,
    pub seed_source: Provenance,
}

impl ExperimentConfig {
    /// Resolve `specs` from flags, then file entries, then defaults. The
    /// seed additionally falls back to `env_seed`, then 0.
    pub fn resolve(
        command: &str,
        specs: &[KeySpec],
        flags: &[(String, String)],
        file: &[(usize, String, String)],
        env_seed: Option<&str>,
    ) -> Result<Self, ConfigError> {
        let seed_spec = KeySpec {
            name: "seed",
            kind: KeyKind::UInt,
            default: None,
            help: "",
        };
        for (_, key, _) in file {
            if key != "seed" && !specs.iter().any(|s| s.name == key) {
                return Err(ConfigError::UnknownKey {
                    key: key.clone(),
                    command: command.to_string(),
                });
            }
        }
        let lookup = |name: &str| -> (Option<&String>, Option<&String>) {
            (
                flags.iter().find(|(k, _)| k == name).map(|(_, v)| v),
                file.iter().find(|(_, k, _)| k == name).map(|(_, _, v)| v),
            )
        };

        let mut values = BTreeMap::new();
        for spec in specs {
            let resolved = match lookup(spec.name) {
                (Some(v), _) => Some((v.as_str(), Provenance::Flag)),
                (None, Some(v)) => Some((v.as_str(), Provenance::File)),
                (None, None) => spec.default.map(|d| (d, Provenance::Default)),
            };
            if let Some((raw, prov)) = resolved {
                values.insert(spec.name.to_string(), (parse_value(spec, raw)?, prov));
            }
        }

        let (seed, seed_source) = match lookup("seed") {
            (Some(v), _) => (v.as_str(), Provenance::Flag),
            (None, Some(v)) => (v.as_str(), Provenance::File),
            (None, None) => match env_seed {
                Some(v) => (v, Provenance::Env),
                None => ("0", Provenance::Default),
            },
        };
        let seed = match parse_value(&seed_spec, seed)? {
            Value::UInt(s) => s,
            _ => unreachable!("seed is an integer key"),
        };
        Ok(Self {
            command: command.to_string(),
            values,
            seed,
            seed_source,
        })
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn provenance(&self, key: &str) -> Option<Provenance> {
        self.values.get(key).map(|(_, p)| *p)
    }

    fn get(&self, key: &str) -> Result<&Value, ConfigError> {
        self.values
            .get(key)
            .map(|(v, _)| v)
            .ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    pub fn uint(&self, key: &str) -> Result<u64, ConfigError> {
        match self.get(key)? {
            Value::UInt(v) => Ok(*v),
            other => Err(ConfigError::invalid(key, format!("not an integer: {other}"))),
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        usize::try_from(self.uint(key)?).map_err(|_| ConfigError::invalid(key, "too large"))
    }

    pub fn real(&self, key: &str) -> Result<f64, ConfigError> {
        match self.get(key)? {
            Value::Real(v) => Ok(*v),
            other => Err(ConfigError::invalid(key, format!("not a real: {other}"))),
        }
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        match self.get(key)? {
            Value::RealList(v) => Ok(v.clone()),
            other => Err(ConfigError::invalid(key, format!("not a list: {other}"))),
        }
    }

    pub fn text(&self, key: &str) -> Result<&str, ConfigError> {
        match self.get(key)? {
            Value::Text(v) => Ok(v),
            other => Err(ConfigError::invalid(key, format!("not text: {other}"))),
        }
    }

    /// `# config key = value (provenance)` lines, keys sorted, seed last.
    pub fn echo(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .values
            .iter()
            .map(|(k, (v, p))| format!("config {k} = {v} ({p})"))
            .collect();
        lines.push(format!("config seed = {} ({})", self.seed, self.seed_source));
        lines
    }
}
