//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Keys that change how a run executes but not what it computes.
/// They are left out of the config hash.
pub const EXECUTION_KEYS: &[&str] = &["threads", "out", "out_dir"];

pub struct Key {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

pub const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> Key {
    Key {
        name,
        default,
        help,
    }
}

pub const COMMON: &[Key] = &[
    key("seed", Some("42"), "base seed of every random stream"),
    key(
        "threads",
        Some("0"),
        "worker threads (0 = all cores); CTMIX_THREADS overrides",
    ),
];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Origin {
    File { path: String, line: usize },
    Override(String),
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Override(arg) => write!(f, "override `{arg}`"),
            Origin::Default => write!(f, "default"),
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: Origin,
}

#[derive(Debug, Clone)]
pub struct Config {
    command: &'static str,
    entries: BTreeMap<String, Entry>,
}

fn split_pair(text: &str) -> Option<(&str, &str)> {
    let (k, v) = text.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k, v.trim()))
}

impl Config {
    /// Reads `file` (if any), applies `overrides`, and fills defaults.
    /// Keys outside `schema` and `COMMON` are rejected.
    pub fn load(
        command: &'static str,
        schema: &[Key],
        file: Option<&Path>,
        overrides: &[String],
    ) -> CliResult<Self> {
        let known = |k: &str| schema.iter().chain(COMMON).any(|s| s.name == k);
        let mut entries = BTreeMap::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let origin = Origin::File {
                    path: path.display().to_string(),
                    line: i + 1,
                };
                let Some((k, v)) = split_pair(line) else {
                    return Err(CliError::Config(format!(
                        "{origin}: expected `key = value`, got `{line}`"
                    )));
                };
                if !known(k) {
                    return Err(CliError::Config(format!(
                        "{origin}: unknown key `{k}` for command `{command}`"
                    )));
                }
                if entries.contains_key(k) {
                    return Err(CliError::Config(format!("{origin}: key `{k}` given twice")));
                }
                entries.insert(
                    k.to_string(),
                    Entry {
                        value: v.to_string(),
                        origin,
                    },
                );
            }
        }
        for arg in overrides {
            let origin = Origin::Override(arg.clone());
            let Some((k, v)) = split_pair(arg) else {
                return Err(CliError::Config(format!("{origin}: expected `key=value`")));
            };
            if !known(k) {
                return Err(CliError::Config(format!(
                    "{origin}: unknown key `{k}` for command `{command}`"
                )));
            }
            entries.insert(
                k.to_string(),
                Entry {
                    value: v.to_string(),
                    origin,
                },
            );
        }
        for s in schema.iter().chain(COMMON) {
            if let (Some(d), false) = (s.default, entries.contains_key(s.name)) {
                entries.insert(
                    s.name.to_string(),
                    Entry {
                        value: d.to_string(),
                        origin: Origin::Default,
                    },
                );
            }
        }
        Ok(Self { command, entries })
    }

    pub fn command(&self) -> &'static str {
        self.command
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn field_error(&self, key: &str, reason: impl fmt::Display) -> CliError {
        match self.entries.get(key) {
            Some(e) => CliError::Config(format!("{}: field `{key}`: {reason}", e.origin)),
            None => CliError::Config(format!("field `{key}`: {reason}")),
        }
    }

    pub fn str(&self, key: &str) -> CliResult<&str> {
        self.entries
            .get(key)
            .map(|e| e.value.as_str())
            .ok_or_else(|| {
                CliError::Config(format!(
                    "missing required field `{key}` for command `{}`",
                    self.command
                ))
            })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.str(key)?;
        raw.parse::<T>()
            .map_err(|e| self.field_error(key, format!("cannot parse `{raw}`: {e}")))
    }

    pub fn opt<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        if self.has(key) {
            self.get(key).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn positive(&self, key: &str) -> CliResult<f64> {
        let x: f64 = self.get(key)?;
        if x > 0.0 && x.is_finite() {
            Ok(x)
        } else {
            Err(self.field_error(key, format!("must be a finite positive number, got {x}")))
        }
    }

    pub fn at_least(&self, key: &str, min: usize) -> CliResult<usize> {
        let n: usize = self.get(key)?;
        if n >= min {
            Ok(n)
        } else {
            Err(self.field_error(key, format!("must be at least {min}, got {n}")))
        }
    }

    pub fn list(&self, key: &str) -> CliResult<Vec<f64>> {
        let raw = self.str(key)?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| self.field_error(key, format!("cannot parse `{}`: {e}", s.trim())))
            })
            .collect()
    }

    /// Wraps a model-level validation error with the field's location.
    pub fn check<T>(&self, key: &str, r: ctmix::Result<T>) -> CliResult<T> {
        r.map_err(|e| self.field_error(key, e))
    }

    /// `key=value` lines of every non-execution key, sorted, after defaults.
    pub fn canonical(&self) -> String {
        let mut s = format!("command={}\n", self.command);
        for (k, e) in &self.entries {
            if !EXECUTION_KEYS.contains(&k.as_str()) {
                s.push_str(&format!("{k}={}\n", e.value));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const SCHEMA: &[Key] = &[
        key("rate", None, ""),
        key("n", Some("5"), ""),
        key("out", Some("x"), ""),
    ];

    #[test]
    fn file_overrides_and_defaults() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\nrate = 2.5\n\nseed=7").unwrap();
        let c = Config::load("t", SCHEMA, Some(f.path()), &["rate=3".into()]).unwrap();
        assert_eq!(c.positive("rate").unwrap(), 3.0);
        assert_eq!(c.get::<u64>("seed").unwrap(), 7);
        assert_eq!(c.get::<usize>("n").unwrap(), 5);
    }

    #[test]
    fn unknown_key_names_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "rate = 1\nbogus = 2").unwrap();
        let e = Config::load("t", SCHEMA, Some(f.path()), &[])
            .unwrap_err()
            .to_string();
        assert!(e.contains(":2:") && e.contains("bogus"), "{e}");
        let e = Config::load("t", SCHEMA, None, &["nope=1".into()])
            .unwrap_err()
            .to_string();
        assert!(e.contains("nope"));
    }

    #[test]
    fn bad_value_names_field_and_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "rate = fast").unwrap();
        let c = Config::load("t", SCHEMA, Some(f.path()), &[]).unwrap();
        let e = c.positive("rate").unwrap_err().to_string();
        assert!(e.contains(":1") && e.contains("`rate`"), "{e}");
        let c = Config::load("t", SCHEMA, None, &[]).unwrap();
        assert!(c
            .positive("rate")
            .unwrap_err()
            .to_string()
            .contains("`rate`"));
    }

    #[test]
    fn canonical_skips_execution_keys() {
        let a = Config::load("t", SCHEMA, None, &["threads=1".into(), "out=a".into()]).unwrap();
        let b = Config::load("t", SCHEMA, None, &["threads=4".into(), "out=b".into()]).unwrap();
        assert_eq!(a.canonical(), b.canonical());
        let c = Config::load("t", SCHEMA, None, &["seed=1".into()]).unwrap();
        assert_ne!(a.canonical(), c.canonical());
    }
}
