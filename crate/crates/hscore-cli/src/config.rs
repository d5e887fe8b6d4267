//! `--config` file support.
//!
//! A config file is a flat JSON object whose keys are long flag names
//! (kebab-case, as typed on the command line) and whose values match the
//! flag types. Command-line flags win over config values; defaults apply
//! last. Keys that do not belong to the active command are rejected so a
//! typo cannot silently change a run.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde_json::Value;

use hscore::Error;

use crate::CliError;

/// Parsed config file plus a consumption ledger for unknown-key detection.
pub struct ConfigFile {
    path: String,
    map: serde_json::Map<String, Value>,
    consumed: BTreeSet<String>,
}

impl ConfigFile {
    /// Loads and parses a config file; `None` input yields an empty config.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self {
                path: String::new(),
                map: serde_json::Map::new(),
                consumed: BTreeSet::new(),
            });
        };
        let bytes = std::fs::read(path).map_err(|e| {
            CliError::Lib(Error::Io {
                path: path.display().to_string(),
                source: e,
            })
        })?;
        let value: Value = serde_json::from_slice(&bytes).map_err(|e| {
            CliError::Lib(Error::Parse {
                path: path.display().to_string(),
                line: e.line(),
                message: e.to_string(),
            })
        })?;
        let Value::Object(map) = value else {
            return Err(CliError::Usage(format!(
                "config file {} must hold a JSON object of flag values",
                path.display()
            )));
        };
        Ok(Self {
            path: path.display().to_string(),
            map,
            consumed: BTreeSet::new(),
        })
    }

    fn take(&mut self, key: &str) -> Option<&Value> {
        let value = self.map.get(key);
        if value.is_some() {
            self.consumed.insert(key.to_string());
        }
        value
    }

    fn type_err(&self, key: &str, expected: &str) -> CliError {
        CliError::Usage(format!(
            "config key `{key}` in {} must be {expected}",
            self.path
        ))
    }

    /// String-valued key, used for paths and enums.
    pub fn string(&mut self, key: &str) -> Result<Option<String>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.type_err(key, "a string")),
        }
    }

    /// Path-valued key.
    pub fn path(&mut self, key: &str) -> Result<Option<PathBuf>, CliError> {
        Ok(self.string(key)?.map(PathBuf::from))
    }

    /// Float-valued key.
    pub fn f64(&mut self, key: &str) -> Result<Option<f64>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_f64()
                .map(Some)
                .ok_or_else(|| self.type_err(key, "a finite number")),
            Some(_) => Err(self.type_err(key, "a number")),
        }
    }

    /// Unsigned-integer key.
    pub fn u64(&mut self, key: &str) -> Result<Option<u64>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_u64()
                .map(Some)
                .ok_or_else(|| self.type_err(key, "a non-negative integer")),
            Some(_) => Err(self.type_err(key, "a non-negative integer")),
        }
    }

    /// `usize` key (checked narrowing of `u64`).
    pub fn usize(&mut self, key: &str) -> Result<Option<usize>, CliError> {
        match self.u64(key)? {
            None => Ok(None),
            Some(v) => usize::try_from(v)
                .map(Some)
                .map_err(|_| self.type_err(key, "an integer that fits the platform")),
        }
    }

    /// List-of-strings key (candidate specs).
    pub fn string_list(&mut self, key: &str) -> Result<Option<Vec<String>>, CliError> {
        match self.take(key) {
            None => Ok(None),
            Some(Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    let Value::String(s) = item else {
                        return Err(self.type_err(key, "an array of strings"));
                    };
                    out.push(s.clone());
                }
                Ok(Some(out))
            }
            Some(_) => Err(self.type_err(key, "an array of strings")),
        }
    }

    /// Fails if any config key was never consumed by the active command.
    pub fn finish(self) -> Result<(), CliError> {
        for key in self.map.keys() {
            if !self.consumed.contains(key) {
                return Err(CliError::Usage(format!(
                    "config key `{key}` in {} is not a flag of this command",
                    self.path
                )));
            }
        }
        Ok(())
    }
}

/// CLI value if present, else config value, else `None`.
pub fn prefer<T>(cli: Option<T>, config: Option<T>) -> Option<T> {
    cli.or(config)
}
