//! The JSON run configuration. Every section is optional and defaults
//! field by field; unknown keys anywhere are errors and are all reported at
//! once.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canny::CannyConfig;
use crate::error::{Error, Result};
use crate::features::EvalConfig;
use crate::training::TrainConfig;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub canny: CannyConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .train
            .problems()
            .into_iter()
            .map(|p| format!("train: {p}"))
            .collect();
        if let Err(e) = self.canny.validate() {
            out.push(format!("canny: {e}"));
        }
        out.extend(self.eval.orb.problems().into_iter().map(|p| format!("eval.orb: {p}")));
        out
    }
}

/// Keys of `given` absent from the schema object `known`, recursing into
/// nested objects.
fn unknown_keys(given: &Value, known: &Value, prefix: &str, out: &mut Vec<String>) {
    let (Value::Object(g), Value::Object(k)) = (given, known) else {
        return;
    };
    for (key, v) in g {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match k.get(key) {
            Some(schema) => unknown_keys(v, schema, &path, out),
            None => out.push(path),
        }
    }
}

pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("not valid JSON: {e}")]))?;
    if !value.is_object() {
        return Err(Error::Config(vec!["top level must be an object".into()]));
    }
    let schema = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
    let mut unknown = Vec::new();
    unknown_keys(&value, &schema, "", &mut unknown);
    if !unknown.is_empty() {
        return Err(Error::Config(
            unknown.into_iter().map(|k| format!("unknown key `{k}`")).collect(),
        ));
    }
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(vec![e.to_string()]))?;
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    Ok(cfg)
}

pub fn read_run_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_run_config(&text)
}
