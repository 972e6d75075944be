//! Run configuration: one JSON file with per-task sections plus
//! command-line overrides of scalar fields.

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde_json::Value;
use std::path::Path;

/// Load the config file and apply `key.path=value` overrides.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut value: Value =
        serde_json::from_str(&text).with_context(|| format!("config {} is not valid JSON", path.display()))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("override '{item}' is not of the form key=value"))?;
        apply_override(&mut value, key, raw)?;
    }
    Ok(value)
}

/// Set a dotted-path key to a scalar. The value parses as JSON when
/// possible (numbers, booleans, null, quoted strings) and falls back to a
/// plain string.
pub fn apply_override(config: &mut Value, key: &str, raw: &str) -> Result<()> {
    let parsed: Value = serde_json::from_str(raw).unwrap_or(Value::String(raw.to_string()));
    let mut cursor = config;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !cursor.is_object() {
            bail!("override '{key}': '{}' is not an object", parts[..i].join("."));
        }
        let map = cursor.as_object_mut().unwrap();
        if i + 1 == parts.len() {
            map.insert(part.to_string(), parsed);
            return Ok(());
        }
        cursor = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Deserialize a named section; a missing or malformed section is an error
/// naming it.
pub fn section<T: DeserializeOwned>(config: &Value, name: &str) -> Result<T> {
    let raw = config
        .get(name)
        .ok_or_else(|| anyhow!("config is missing the '{name}' section"))?;
    serde_json::from_value(raw.clone()).with_context(|| format!("invalid '{name}' section"))
}

/// The root seed; mandatory for every training or generation task.
pub fn required_seed(config: &Value) -> Result<u64> {
    config
        .get("seed")
        .and_then(Value::as_u64)
        .ok_or_else(|| anyhow!("config is missing the mandatory 'seed' field"))
}

pub fn require_path(value: &str, field: &str) -> Result<()> {
    if value.is_empty() {
        bail!("config field '{field}' is empty");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_parse_scalars_and_paths() {
        let mut v: Value = serde_json::json!({"train_ner": {"epochs": 5}});
        apply_override(&mut v, "train_ner.epochs", "10").unwrap();
        apply_override(&mut v, "train_ner.learning_rate", "0.003").unwrap();
        apply_override(&mut v, "train_ner.corpus", "a/b.jsonl").unwrap();
        apply_override(&mut v, "seed", "7").unwrap();
        assert_eq!(v["train_ner"]["epochs"], 10);
        assert_eq!(v["train_ner"]["learning_rate"], 0.003);
        assert_eq!(v["train_ner"]["corpus"], "a/b.jsonl");
        assert_eq!(required_seed(&v).unwrap(), 7);
    }

    #[test]
    fn missing_seed_is_an_error_naming_the_field() {
        let v: Value = serde_json::json!({});
        let err = required_seed(&v).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }
}
