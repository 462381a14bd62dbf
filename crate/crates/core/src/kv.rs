//! Flat `name = value` text format shared by parameter files and run configs.
//!
//! One entry per line; `#` starts a comment; blank lines are ignored. Keys are
//! case-sensitive and may contain dots (`transform.x`). Later duplicates are an
//! error rather than silently overriding earlier ones.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Ordered key-value map parsed from the flat text format.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `name = value`, got `{raw}`", lineno + 1))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not a number")))
            })
            .transpose()
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| Error::Config(format!("`{key}`: `{v}` is not an unsigned integer")))
            })
            .transpose()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Entries whose key starts with `prefix`, with the prefix stripped.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> {
        self.iter()
            .filter_map(move |(k, v)| k.strip_prefix(prefix).map(|rest| (rest, v)))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

/// Formats a float so that parsing it back yields the identical bits.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let kv = KvMap::parse("# header\n\nbeta = 0.99 # discount\n theta=0.875\n").unwrap();
        assert_eq!(kv.get("beta"), Some("0.99"));
        assert_eq!(kv.get_f64("theta").unwrap(), Some(0.875));
        assert_eq!(kv.get("gamma"), None);
    }

    #[test]
    fn rejects_duplicates_and_missing_equals() {
        assert!(KvMap::parse("a = 1\na = 2").is_err());
        assert!(KvMap::parse("just a line").is_err());
        assert!(KvMap::parse(" = 3").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut kv = KvMap::new();
        kv.insert("x", format_f64(0.1 + 0.2));
        kv.insert("name", "is");
        let back = KvMap::parse(&kv.to_text()).unwrap();
        assert_eq!(back, kv);
        assert_eq!(back.get_f64("x").unwrap(), Some(0.1 + 0.2));
    }
}
