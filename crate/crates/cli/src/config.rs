//! Plain-text run configuration.
//!
//! A configuration file holds `key = value` lines; blank lines and text from
//! `#` to the end of a line are ignored. Keys are the long flag names of the
//! selected subcommand (with `_` accepted for `-`). The entries are spliced
//! into the argument list ahead of the command-line flags, so flags given on
//! the command line take precedence.

use std::ffi::OsString;

use clap::{ArgAction, Command};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("config line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("config line {line}: unknown key {key:?} for `{command}`")]
    UnknownKey { line: usize, key: String, command: String },
    #[error("config line {line}: key {key:?} given twice")]
    Duplicate { line: usize, key: String },
    #[error("config line {line}: {key} expects true or false, got {value:?}")]
    NotABool { line: usize, key: String, value: String },
}

/// One `key = value` entry with its line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parse the text of a configuration file.
pub fn parse(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
        if content.is_empty() {
            continue;
        }
        let syntax = || ConfigError::Syntax { line, text: raw.to_string() };
        let (key, value) = content.split_once('=').ok_or_else(syntax)?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        if key.is_empty() || value.is_empty() || key.contains(char::is_whitespace) {
            return Err(syntax());
        }
        if out.iter().any(|e| e.key == key) {
            return Err(ConfigError::Duplicate { line, key });
        }
        out.push(Entry { line, key, value: value.to_string() });
    }
    Ok(out)
}

/// Translate entries into flags of `command`, rejecting keys it does not know.
pub fn to_args(entries: &[Entry], command: &Command) -> Result<Vec<OsString>, ConfigError> {
    let mut args = Vec::new();
    for e in entries {
        let arg = command
            .get_arguments()
            .find(|a| a.get_long() == Some(e.key.as_str()) && e.key != "config")
            .ok_or_else(|| ConfigError::UnknownKey {
                line: e.line,
                key: e.key.clone(),
                command: command.get_name().to_string(),
            })?;
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match e.value.as_str() {
                "true" => args.push(format!("--{}", e.key).into()),
                "false" => {}
                _ => {
                    return Err(ConfigError::NotABool { line: e.line, key: e.key.clone(), value: e.value.clone() });
                }
            }
        } else {
            args.push(format!("--{}={}", e.key, e.value).into());
        }
    }
    Ok(args)
}
