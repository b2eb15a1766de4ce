//! Minimal `key = value` config-text reader used by the pipeline, model and
//! scenario config files.
//!
//! Lines are `key = value`, `#` starts a comment, blank lines are ignored.
//! Repeated keys accumulate in order, which the scenario schedule relies on.

use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KvError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("missing required key {0:?}")]
    MissingKey(String),
    #[error("key {key:?}: {reason}")]
    BadValue { key: String, reason: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
}

/// Parsed key/value pairs, in file order.
#[derive(Debug, Clone, Default)]
pub struct KvFile {
    pairs: Vec<(String, String)>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<KvFile, KvError> {
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(KvError::Malformed {
                    line: idx + 1,
                    text: raw.trim().to_string(),
                });
            };
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        Ok(KvFile { pairs })
    }

    /// Last value for a key, mirroring "later lines win" override semantics.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Every value bound to a repeatable key, in file order.
    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.pairs
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    pub fn require(&self, key: &str) -> Result<&str, KvError> {
        self.get(key).ok_or_else(|| KvError::MissingKey(key.to_string()))
    }

    /// Rejects keys outside the allowed set, catching config typos early.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), KvError> {
        let allowed: BTreeSet<&str> = allowed.iter().copied().collect();
        for (key, _) in &self.pairs {
            if !allowed.contains(key.as_str()) {
                return Err(KvError::UnknownKey(key.clone()));
            }
        }
        Ok(())
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, KvError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| KvError::BadValue {
                key: key.to_string(),
                reason: e.to_string(),
            }),
        }
    }
}

pub fn bad_value(key: &str, reason: impl Into<String>) -> KvError {
    KvError::BadValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}
