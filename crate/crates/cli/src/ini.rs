//! Minimal INI reader: `[section]` headers, `key = value` pairs, `#` or `;`
//! comments. Every key must belong to a section and appear at most once.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IniError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for IniError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

pub type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

pub fn parse(text: &str) -> Result<Sections, IniError> {
    let mut sections = Sections::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| IniError { line, message };
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') || content.starts_with(';') {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(format!("malformed section header `{content}`")))?
                .trim();
            if name.is_empty() {
                return Err(err("empty section name".into()));
            }
            if sections.contains_key(name) {
                return Err(err(format!("section [{name}] appears twice")));
            }
            sections.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        let value = strip_comment(value).trim();
        if key.is_empty() {
            return Err(err("empty key".into()));
        }
        let section = current
            .as_ref()
            .ok_or_else(|| err(format!("key `{key}` appears before any section")))?;
        let table = sections.get_mut(section).expect("section was inserted");
        if table.contains_key(key) {
            return Err(err(format!("duplicate key `{key}` in [{section}]")));
        }
        table.insert(key.to_string(), Entry { value: value.to_string(), line });
    }
    Ok(sections)
}

fn strip_comment(value: &str) -> &str {
    match value.find([';', '#']) {
        Some(i) if i == 0 || value[..i].ends_with(char::is_whitespace) => &value[..i],
        _ => value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_sections_and_trims() {
        let s = parse("# top\n[model]\n tau = 0.5 ; delay\nreaction=logistic\n\n[solver]\nstep = 1e-2\n").unwrap();
        assert_eq!(s["model"]["tau"].value, "0.5");
        assert_eq!(s["model"]["reaction"].value, "logistic");
        assert_eq!(s["solver"]["step"].line, 7);
    }

    #[test]
    fn rejects_malformed_input() {
        assert_eq!(parse("tau = 1\n").unwrap_err().line, 1);
        assert!(parse("[model\n").is_err());
        assert!(parse("[model]\ntau 1\n").is_err());
        assert!(parse("[model]\ntau = 1\ntau = 2\n").unwrap_err().message.contains("duplicate"));
        assert!(parse("[a]\n[a]\n").is_err());
    }
}
