//! Assembles the configuration for one run: preset, then config file, then
//! `SHAKEN_TRAP_*` environment overrides, then command-line overrides.

use std::path::Path;

use serde_json::{Map, Value};
use shaken_trap::config::{set_path, validate_config, ExperimentConfig, OutputFormat};

use crate::error::CliError;
use crate::presets::{self, Preset};

pub const ENV_PREFIX: &str = "SHAKEN_TRAP_";

#[derive(Debug, Clone)]
pub struct Context {
    /// Merged document before validation.
    pub document: Value,
    pub config: ExperimentConfig,
    pub preset: Option<Preset>,
    pub format: OutputFormat,
    pub seed: Option<u64>,
}

impl Context {
    /// Canonical document of the validated configuration, defaults filled in.
    pub fn canonical(&self) -> Value {
        self.config.to_document()
    }

    pub fn preset_section(&self, name: &str) -> Option<&Value> {
        self.preset.as_ref().and_then(|p| p.section(name))
    }
}

pub fn merge(base: &mut Value, overlay: &Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k.clone()).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o.clone(),
    }
}

/// `SHAKEN_TRAP_DRIVE__AMPLITUDE_M=0.02` becomes `drive.amplitude_m = 0.02`.
pub fn env_overrides(vars: impl IntoIterator<Item = (String, String)>) -> Vec<(String, Value)> {
    let mut out: Vec<(String, Value)> = vars
        .into_iter()
        .filter_map(|(k, v)| {
            let rest = k.strip_prefix(ENV_PREFIX)?;
            if rest.is_empty() {
                return None;
            }
            let path = rest.to_ascii_lowercase().replace("__", ".");
            let value = serde_json::from_str(&v).unwrap_or(Value::String(v));
            Some((path, value))
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn read_document(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: not valid JSON: {e}", path.display())))
}

pub struct Sources<'a> {
    pub preset: Option<&'a str>,
    pub config_path: Option<&'a Path>,
    pub env: Vec<(String, Value)>,
    pub overrides: Vec<(String, Value)>,
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
}

/// Merged document, without validation. `None` when nothing was supplied.
pub fn assemble(src: &Sources<'_>) -> Result<(Option<Preset>, Option<Value>), CliError> {
    let preset = match src.preset {
        Some(name) => Some(presets::preset(name).ok_or_else(|| {
            CliError::config(format!(
                "unknown preset '{name}' (available: {})",
                presets::names().join(", ")
            ))
        })?),
        None => None,
    };
    let mut supplied = false;
    let mut doc = Value::Object(Map::new());
    if let Some(p) = &preset {
        merge(&mut doc, &p.config);
        supplied = true;
    }
    if let Some(path) = src.config_path {
        let file = read_document(path)?;
        if !file.is_object() {
            return Err(CliError::config(format!("{}: top level must be an object", path.display())));
        }
        merge(&mut doc, &file);
        supplied = true;
    }
    for (path, value) in src.env.iter().chain(&src.overrides) {
        set_path(&mut doc, path, value.clone());
        supplied = true;
    }
    if let Some(seed) = src.seed {
        if doc.pointer("/drive/noise").is_some_and(Value::is_object) {
            set_path(&mut doc, "drive.noise.seed", Value::from(seed));
        }
    }
    if let Some(format) = src.format {
        set_path(&mut doc, "output.format", Value::from(format.as_str()));
    }
    Ok((preset, supplied.then_some(doc)))
}

pub fn load(src: &Sources<'_>) -> Result<Context, CliError> {
    let (preset, doc) = assemble(src)?;
    let document = doc.ok_or_else(|| CliError::config("no configuration given; use --config or --preset"))?;
    let config = validate_config(&document)?;
    let format = config.output.format;
    Ok(Context {
        document,
        config,
        preset,
        format,
        seed: src.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn env_keys_map_to_dotted_paths() {
        let vars = vec![
            ("SHAKEN_TRAP_DRIVE__AMPLITUDE_M".to_string(), "0.02".to_string()),
            ("SHAKEN_TRAP_SPECIES__NAME".to_string(), "Na23".to_string()),
            ("PATH".to_string(), "/bin".to_string()),
        ];
        let o = env_overrides(vars);
        assert_eq!(
            o,
            vec![
                ("drive.amplitude_m".to_string(), json!(0.02)),
                ("species.name".to_string(), json!("Na23")),
            ]
        );
    }

    #[test]
    fn later_sources_win() {
        let src = Sources {
            preset: Some("fig3-default"),
            config_path: None,
            env: vec![("drive.amplitude_m".into(), json!(0.5))],
            overrides: vec![("drive.amplitude_m".into(), json!(0.25))],
            seed: Some(3),
            format: Some(OutputFormat::Json),
        };
        let ctx = load(&src).unwrap();
        assert_eq!(ctx.config.drive.amplitude, 0.25);
        assert_eq!(ctx.format, OutputFormat::Json);
        // no noise block, so the seed is not injected
        assert!(ctx.document.pointer("/drive/noise").is_none());
    }

    #[test]
    fn nothing_supplied_is_a_config_error() {
        let src = Sources {
            preset: None,
            config_path: None,
            env: vec![],
            overrides: vec![],
            seed: None,
            format: None,
        };
        assert_eq!(load(&src).unwrap_err().exit_code(), 1);
    }
}
