//! Config-file fallback and deterministic JSON output helpers.
//!
//! Resolution order for every parameter: explicit CLI flag, then the
//! `--config` JSON file, then the built-in default. Every command echoes
//! its fully resolved configuration into its output for provenance.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::CliError;

/// Flat key-value defaults loaded from a `--config` JSON file.
pub struct FileConfig {
    values: Map<String, Value>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let values = match path {
            None => Map::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", p.display())))?;
                let value: Value = serde_json::from_str(&text)
                    .map_err(|e| CliError::Data(format!("invalid config JSON: {e}")))?;
                match value {
                    Value::Object(map) => map,
                    _ => {
                        return Err(CliError::Usage(
                            "config file must hold a flat JSON object".to_string(),
                        ))
                    }
                }
            }
        };
        Ok(FileConfig { values })
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    /// Deserialize the whole config object as one structure.
    pub fn as_struct<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        serde_json::from_value(Value::Object(self.values.clone()))
            .map_err(|e| CliError::Usage(format!("config file: {e}")))
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }
}

/// flag value, else config value, else default
pub fn resolve<T: DeserializeOwned + Clone>(
    flag: &Option<T>,
    cfg: &FileConfig,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    Ok(match flag {
        Some(v) => v.clone(),
        None => cfg.get::<T>(key)?.unwrap_or(default),
    })
}

/// flag value, else config value, else a usage error
pub fn require<T: DeserializeOwned + Clone>(
    flag: &Option<T>,
    cfg: &FileConfig,
    key: &str,
) -> Result<T, CliError> {
    match flag {
        Some(v) => Ok(v.clone()),
        None => cfg
            .get::<T>(key)?
            .ok_or_else(|| CliError::Usage(format!("missing required parameter `{key}`"))),
    }
}

/// Round every number in a JSON tree to 1e-9 so printed output is stable.
pub fn round_json(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    let rounded = (f * 1e9).round() / 1e9;
                    if let Some(num) = serde_json::Number::from_f64(rounded) {
                        *value = Value::Number(num);
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Serialize a config echo plus results with a trailing newline. Result
/// floats are rounded to 1e-9; the config echo is left untouched so that
/// feeding it back through `--config` reproduces the run exactly.
pub fn emit_json(
    config: Value,
    results_key: &str,
    mut results: Value,
    out: Option<&Path>,
) -> Result<(), CliError> {
    round_json(&mut results);
    let doc = serde_json::json!({ "config": config, results_key: results });
    let text = format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable"));
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Bucket lists may arrive as a `0,1,2` flag string or as a JSON array in
/// a config file.
pub fn resolve_bucket_list(
    flag: &Option<String>,
    cfg: &FileConfig,
    key: &str,
    default: &str,
) -> Result<Vec<u32>, CliError> {
    if let Some(text) = flag {
        return parse_bucket_list(text);
    }
    match cfg.raw(key) {
        Some(Value::String(s)) => parse_bucket_list(s),
        Some(other) => serde_json::from_value(other.clone())
            .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))),
        None => parse_bucket_list(default),
    }
}

/// Parse `0,1,2`-style bucket lists.
pub fn parse_bucket_list(text: &str) -> Result<Vec<u32>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| CliError::Usage(format!("invalid bucket `{s}` in list")))
        })
        .collect()
}

/// Parse `id:weight,id:weight` behavior weight specs.
pub fn parse_behavior_weights(text: &str) -> Result<Vec<(u32, f64)>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (id, w) = pair
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("expected `id:weight`, got `{pair}`")))?;
            let id = id
                .trim()
                .parse::<u32>()
                .map_err(|_| CliError::Usage(format!("invalid behavior id `{id}`")))?;
            let w = w
                .trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("invalid behavior weight `{w}`")))?;
            Ok((id, w))
        })
        .collect()
}
