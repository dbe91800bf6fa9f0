//! Flat `key=value` config files that mirror command-line flags.

use std::fs;
use std::path::Path;

use fockboot::{FockError, Result};

/// One `key=value` pair; keys are flag names without the leading dashes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Setting {
    pub key: String,
    pub value: String,
}

/// Parses config text. Blank lines and `#` comments are ignored.
pub fn parse(text: &str) -> Result<Vec<Setting>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            FockError::Parse(format!("config line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(FockError::Parse(format!("config line {}: empty key", lineno + 1)));
        }
        out.push(Setting {
            key,
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<(String, Vec<Setting>)> {
    let text = fs::read_to_string(path)?;
    let settings = parse(&text)?;
    Ok((text, settings))
}

/// Turns settings into flag tokens. Boolean `true` becomes a bare flag and
/// `false` drops it.
pub fn to_flags(settings: &[Setting]) -> Vec<String> {
    let mut out = Vec::new();
    for s in settings {
        match s.value.as_str() {
            "true" => out.push(format!("--{}", s.key)),
            "false" => {}
            v => {
                out.push(format!("--{}", s.key));
                out.push(v.to_string());
            }
        }
    }
    out
}

/// Inserts config flags right after the subcommand so that flags given on
/// the command line, which come later, take precedence.
pub fn splice(argv: &[String], subcommand_index: usize, flags: Vec<String>) -> Vec<String> {
    let mut out = argv[..=subcommand_index].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[subcommand_index + 1..]);
    out
}
