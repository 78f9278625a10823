//! Config-file support: every subcommand accepts `--config file.json` whose
//! keys mirror the long flag names. Explicit flags win over file values,
//! file values win over built-in defaults, and every run echoes the fully
//! resolved settings so it can be reproduced from its output alone.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use qflow::{Error, Result};

/// Key–value pairs loaded from a JSON config file.
pub struct ConfigMap {
    values: BTreeMap<String, serde_json::Value>,
}

impl ConfigMap {
    pub fn empty() -> Self {
        ConfigMap {
            values: BTreeMap::new(),
        }
    }

    /// Loads a config file and rejects keys the command does not know, so
    /// typos fail loudly instead of silently running on defaults.
    pub fn load(path: Option<&Path>, known_keys: &[&str]) -> Result<Self> {
        let Some(path) = path else {
            return Ok(ConfigMap::empty());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let values: BTreeMap<String, serde_json::Value> = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config {} is not a JSON object: {e}", path.display())))?;
        for key in values.keys() {
            if !known_keys.contains(&key.as_str()) {
                return Err(Error::Config(format!(
                    "config {}: unknown key {key:?}; known keys: {}",
                    path.display(),
                    known_keys.join(", ")
                )));
            }
        }
        Ok(ConfigMap { values })
    }

    pub fn get_string(&self, key: &str) -> Result<Option<String>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(serde_json::Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(type_error(key, "a string", other)),
        }
    }

    pub fn get_path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.get_string(key)?.map(PathBuf::from))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(serde_json::Value::Number(n)) => Ok(n.as_f64()),
            Some(other) => Err(type_error(key, "a number", other)),
        }
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(serde_json::Value::Number(n)) => n
                .as_u64()
                .map(Some)
                .ok_or_else(|| type_error(key, "a non-negative integer", &self.values[key])),
            Some(other) => Err(type_error(key, "a non-negative integer", other)),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.get_u64(key)?.map(|v| v as usize))
    }

    pub fn get_u32(&self, key: &str) -> Result<Option<u32>> {
        match self.get_u64(key)? {
            None => Ok(None),
            Some(v) => u32::try_from(v)
                .map(Some)
                .map_err(|_| Error::Config(format!("config key {key:?}: {v} does not fit in 32 bits"))),
        }
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(serde_json::Value::Bool(b)) => Ok(Some(*b)),
            Some(other) => Err(type_error(key, "a boolean", other)),
        }
    }
}

fn type_error(key: &str, expected: &str, got: &serde_json::Value) -> Error {
    Error::Config(format!("config key {key:?} must be {expected}, got {got}"))
}

/// Flag value if given, else config value, else the default.
pub fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// As [`resolve`], but the setting has no default and must come from
/// somewhere.
pub fn resolve_required<T>(flag: Option<T>, file: Option<T>, key: &str) -> Result<T> {
    flag.or(file)
        .ok_or_else(|| Error::Config(format!("missing required setting --{key}")))
}

/// Prints the fully resolved settings, one `key = value` line each.
pub struct ConfigEcho {
    lines: Vec<(String, String)>,
}

impl ConfigEcho {
    pub fn new() -> Self {
        ConfigEcho { lines: Vec::new() }
    }

    pub fn add(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    pub fn add_opt(&mut self, key: &str, value: Option<impl Display>) -> &mut Self {
        let rendered = match value {
            Some(v) => v.to_string(),
            None => "(none)".to_string(),
        };
        self.add(key, rendered)
    }

    pub fn print(&self, command: &str) {
        println!("{command} configuration:");
        for (key, value) in &self.lines {
            println!("  {key} = {value}");
        }
    }

    /// The same lines as `# key: value` comments for output-file headers.
    pub fn header_comments(&self, command: &str) -> String {
        let mut out = format!("# qflow {command}\n");
        for (key, value) in &self.lines {
            out.push_str(&format!("# {key}: {value}\n"));
        }
        out
    }
}

/// Formats a path for echoing.
pub fn show_path(path: &Path) -> String {
    path.display().to_string()
}
