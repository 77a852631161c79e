//! Line-oriented `key = value` parameter text with `[section]` headers.
//!
//! Sections may repeat (channel files list one `[path]` block per path),
//! so the document keeps them in file order. Keys before the first header
//! land in an unnamed leading section. `#` and `;` start comments.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    /// Lowercased header name; empty for the leading unnamed section.
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().rev().find(|e| e.key == key)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamDoc {
    pub sections: Vec<Section>,
}

impl ParamDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections = vec![Section {
            name: String::new(),
            line: 0,
            entries: Vec::new(),
        }];
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::Parse {
                    line: line_no,
                    reason: format!("unterminated section header `{line}`"),
                })?;
                sections.push(Section {
                    name: name.trim().to_ascii_lowercase(),
                    line: line_no,
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                reason: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            if key.is_empty() {
                return Err(Error::Parse {
                    line: line_no,
                    reason: "empty key".into(),
                });
            }
            sections
                .last_mut()
                .expect("leading section always present")
                .entries
                .push(Entry {
                    key,
                    value: value.trim().to_string(),
                    line: line_no,
                });
        }
        Ok(ParamDoc { sections })
    }

    /// All sections with the given name, in file order.
    pub fn sections_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Section> + 'a {
        self.sections.iter().filter(move |s| s.name == name)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parses a real number with an optional frequency suffix
/// (`Hz`, `kHz`, `MHz`, `GHz`; case-insensitive). Result is in base units.
pub fn parse_quantity(value: &str) -> Option<f64> {
    let v = value.trim();
    let lower = v.to_ascii_lowercase();
    let (number, exponent) = if let Some(n) = lower.strip_suffix("ghz") {
        (n, 9)
    } else if let Some(n) = lower.strip_suffix("mhz") {
        (n, 6)
    } else if let Some(n) = lower.strip_suffix("khz") {
        (n, 3)
    } else if let Some(n) = lower.strip_suffix("hz") {
        (n, 0)
    } else {
        (lower.as_str(), 0)
    };
    let number = number.trim();
    if exponent == 0 {
        return number.parse().ok();
    }
    // Shift the decimal exponent in text so "19.043 kHz" is exactly 19043.
    if number.contains('e') {
        let x: f64 = number.parse().ok()?;
        Some(x * 10f64.powi(exponent))
    } else {
        format!("{number}e{exponent}").parse().ok()
    }
}

pub fn parse_bool(value: &str) -> Option<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Some(true),
        "off" | "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

pub(crate) fn number(entry: &Entry, field: &str) -> Result<f64> {
    parse_quantity(&entry.value)
        .filter(|x| !x.is_nan())
        .ok_or_else(|| Error::Parse {
            line: entry.line,
            reason: format!("`{field}`: expected a number, found `{}`", entry.value),
        })
}
