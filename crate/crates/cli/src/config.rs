//! Flat JSON configuration files overlaid under command-line flags.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::UsageError;

/// Key accepted for every subcommand.
const GLOBAL_KEYS: &[&str] = &["threads"];

pub fn load(path: &Path) -> Result<Map<String, Value>, UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map
            .into_iter()
            .map(|(k, v)| (k.replace('-', "_"), v))
            .collect()),
        Ok(_) => Err(UsageError(format!(
            "config {} must hold a JSON object",
            path.display()
        ))),
        Err(e) => Err(UsageError(format!("config {}: {e}", path.display()))),
    }
}

/// A flag counts as unset when it is absent, false or an empty list.
fn is_unset(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::Bool(b) => !b,
        Value::Array(a) => a.is_empty(),
        _ => false,
    }
}

/// Fills every unset field of `args` from `file`. Keys that name no field
/// of `args` are rejected.
pub fn merge<T: Serialize + DeserializeOwned>(
    args: T,
    file: &Map<String, Value>,
) -> Result<T, UsageError> {
    let Value::Object(mut fields) =
        serde_json::to_value(&args).expect("argument structs serialize")
    else {
        unreachable!("argument structs serialize to objects");
    };
    for (key, value) in file {
        if GLOBAL_KEYS.contains(&key.as_str()) {
            continue;
        }
        let slot = fields
            .get_mut(key)
            .ok_or_else(|| UsageError(format!("unknown config key '{key}'")))?;
        if is_unset(slot) {
            *slot = match (&*slot, value) {
                (Value::Array(_), Value::String(s)) => Value::Array(vec![Value::String(s.clone())]),
                _ => value.clone(),
            };
        }
    }
    serde_json::from_value(Value::Object(fields)).map_err(|e| UsageError(format!("config: {e}")))
}

/// `--threads`, then the config file, then `DISCO_THREADS`; 0 means one
/// worker per logical core.
pub fn threads(flag: Option<usize>, file: &Map<String, Value>) -> Result<usize, UsageError> {
    if let Some(n) = flag {
        return Ok(n);
    }
    if let Some(v) = file.get("threads") {
        return v.as_u64().map(|n| n as usize).ok_or_else(|| {
            UsageError(format!(
                "config: threads must be a non-negative integer, got {v}"
            ))
        });
    }
    match std::env::var("DISCO_THREADS") {
        Ok(s) if !s.trim().is_empty() => s.trim().parse().map_err(|_| {
            UsageError(format!(
                "DISCO_THREADS must be a non-negative integer, got '{s}'"
            ))
        }),
        _ => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::{AnalyzeArgs, LosscheckArgs};
    use serde_json::json;

    fn map(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn flags_win_over_file() {
        let args = AnalyzeArgs {
            cycle_cap: Some(5),
            ..Default::default()
        };
        let merged = merge(
            args,
            &map(json!({"cycle_cap": 9, "exact": true, "in": "a.pgm"})),
        )
        .unwrap();
        assert_eq!(merged.cycle_cap, Some(5));
        assert!(merged.exact);
        assert_eq!(merged.inputs, vec!["a.pgm".to_string()]);
    }

    #[test]
    fn unknown_and_mistyped_keys_rejected() {
        assert!(merge(AnalyzeArgs::default(), &map(json!({"cycle_length": 9}))).is_err());
        assert!(merge(AnalyzeArgs::default(), &map(json!({"cycle_cap": "nine"}))).is_err());
        assert!(merge(AnalyzeArgs::default(), &map(json!({"threads": 2}))).is_ok());
    }

    #[test]
    fn lists_and_floats() {
        let merged = merge(
            LosscheckArgs::default(),
            &map(json!({"class_weights": [1.0, 1.0, 1.0, 9.0], "lambda_adj": 2.0})),
        )
        .unwrap();
        assert_eq!(merged.class_weights, vec![1.0, 1.0, 1.0, 9.0]);
        assert_eq!(merged.lambda_adj, Some(2.0));
    }

    #[test]
    fn thread_precedence() {
        assert_eq!(threads(Some(3), &map(json!({"threads": 5}))).unwrap(), 3);
        assert_eq!(threads(None, &map(json!({"threads": 5}))).unwrap(), 5);
        assert!(threads(None, &map(json!({"threads": -1}))).is_err());
    }
}
