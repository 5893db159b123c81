//! `key = value` configuration files.
//!
//! Grammar, one statement per line:
//!
//! ```text
//! # comment (also allowed after a value)
//! [section]
//! key = value
//! ```
//!
//! Keys inside a section are addressed as `section.key`. Values may be
//! wrapped in double quotes. Repeated keys and unknown keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> CliResult<KeyValues> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| CliError::Config { line: line_no, message };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err("unterminated section header".into()))?.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(err(format!("bad section name '{name}'")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            let key = key.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(err(format!("bad key '{key}'")));
            }
            let mut value = value.trim();
            if let Some(inner) = value.strip_prefix('"') {
                value = inner.strip_suffix('"').ok_or_else(|| err("unterminated quote".into()))?;
            }
            let full = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            if entries.insert(full.clone(), (line_no, value.to_string())).is_some() {
                return Err(err(format!("duplicate key '{full}'")));
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.0)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.1.as_str())
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        let Some((line, value)) = self.entries.get(key) else {
            return Ok(None);
        };
        value.parse().map(Some).map_err(|_| CliError::Config {
            line: *line,
            message: format!("cannot parse '{value}' for {key}"),
        })
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn f64_list(&self, key: &str) -> CliResult<Option<Vec<f64>>> {
        let Some((line, value)) = self.entries.get(key) else {
            return Ok(None);
        };
        parse_f64_list(value).map(Some).map_err(|message| CliError::Config { line: *line, message })
    }

    pub fn path(&self, key: &str, base: &Path) -> Option<PathBuf> {
        self.str(key).map(|v| base.join(v))
    }

    /// Fails on the first key not in `allowed`.
    pub fn reject_unknown(&self, allowed: &[&str]) -> CliResult<()> {
        match self.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(CliError::Config {
                line: self.line_of(k),
                message: format!("unknown key '{k}'"),
            }),
            None => Ok(()),
        }
    }
}

/// Comma-separated finite numbers.
pub fn parse_f64_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("'{t}' is not a finite number"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_comments_and_quotes() {
        let kv = KeyValues::parse("# top\nname = site\n[grid]\ncellsize = 2.0  # meters\n\n[inputs]\ncontours = \"a b.geojson\"\n").unwrap();
        assert_eq!(kv.str("name"), Some("site"));
        assert_eq!(kv.parsed::<f64>("grid.cellsize").unwrap(), Some(2.0));
        assert_eq!(kv.str("inputs.contours"), Some("a b.geojson"));
        assert_eq!(kv.str("missing"), None);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let e = KeyValues::parse("a = 1\nnot a pair\n").unwrap_err();
        assert!(matches!(e, CliError::Config { line: 2, .. }));
        assert!(KeyValues::parse("[open\n").is_err());
        assert!(KeyValues::parse("a = 1\na = 2\n").is_err());
        assert!(KeyValues::parse("bad key = 1\n").is_err());
        let kv = KeyValues::parse("x = abc\n").unwrap();
        assert!(matches!(kv.parsed::<f64>("x"), Err(CliError::Config { line: 1, .. })));
    }

    #[test]
    fn lists_and_unknown_keys() {
        let kv = KeyValues::parse("[lake]\nseed = 1.5, 2\n").unwrap();
        assert_eq!(kv.f64_list("lake.seed").unwrap(), Some(vec![1.5, 2.0]));
        assert!(kv.reject_unknown(&["lake.seed"]).is_ok());
        assert!(kv.reject_unknown(&["lake.pour"]).is_err());
        assert!(parse_f64_list("1,,2").is_err());
    }
}
