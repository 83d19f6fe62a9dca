//! Shared parser for the plain-text `key = value` configuration formats
//! (accelerator configs, energy tables, sweep specs, saved models).
//!
//! Grammar: one `key = value` pair per line, `#` starts a comment,
//! blank lines are skipped, `[section]` opens a named section.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KvEntry {
    pub line: usize,
    pub section: Option<String>,
    pub key: String,
    pub value: String,
}

pub fn parse_kv(text: &str, source_name: &str) -> Result<Vec<KvEntry>> {
    let mut entries = Vec::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        if let Some(name) = stripped.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| Error::Parse {
                source_name: source_name.to_string(),
                line,
                msg: format!("unterminated section header '{stripped}'"),
            })?;
            section = Some(name.trim().to_string());
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or_else(|| Error::Parse {
            source_name: source_name.to_string(),
            line,
            msg: format!("expected 'key = value', got '{stripped}'"),
        })?;
        entries.push(KvEntry {
            line,
            section: section.clone(),
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(entries)
}

pub fn parse_err(source_name: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source_name.to_string(),
        line,
        msg: msg.into(),
    }
}

/// Parses a single scalar value, attaching file/line context on failure.
pub fn scalar<T: std::str::FromStr>(entry: &KvEntry, source_name: &str) -> Result<T> {
    entry.value.parse::<T>().map_err(|_| {
        parse_err(
            source_name,
            entry.line,
            format!("cannot parse '{}' as {} for key '{}'", entry.value, std::any::type_name::<T>(), entry.key),
        )
    })
}

/// Parses a comma-separated list of values.
pub fn list<T: std::str::FromStr>(entry: &KvEntry, source_name: &str) -> Result<Vec<T>> {
    entry
        .value
        .split(',')
        .map(|item| {
            item.trim().parse::<T>().map_err(|_| {
                parse_err(
                    source_name,
                    entry.line,
                    format!("cannot parse '{}' in list for key '{}'", item.trim(), entry.key),
                )
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_comments_and_blanks() {
        let text = "\n# header\nrows = 8\n[fp32]\ne_mac = 1e-12 # trailing\n";
        let entries = parse_kv(text, "t").unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].key, "rows");
        assert_eq!(entries[0].section, None);
        assert_eq!(entries[1].key, "e_mac");
        assert_eq!(entries[1].value, "1e-12");
        assert_eq!(entries[1].section.as_deref(), Some("fp32"));
    }

    #[test]
    fn missing_equals_is_a_parse_error_with_line() {
        let err = parse_kv("rows = 4\nbogus line\n", "cfg").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cfg:2"), "{msg}");
    }
}
