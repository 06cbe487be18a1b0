//! Run configuration: one TOML file drives dataset generation, training
//! and evaluation. CLI flags override individual dotted keys.

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::Aggregate;
use crate::pipeline::PhantomDatasetConfig;
use crate::trainer::TrainConfig;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub aggregate: Aggregate,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { aggregate: Aggregate::PoolPixels }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; `apply_master_seed` fans it out to every seeded field.
    pub seed: u64,
    pub data: PhantomDatasetConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 17,
            data: PhantomDatasetConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.data.spec.validate()?;
        self.data.style_a.validate()?;
        self.data.style_b.validate()?;
        self.train.validate()
    }

    /// Propagate the master seed into the phantom spec, the split and the
    /// trainer so one flag pins the whole run.
    pub fn apply_master_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.data.spec.seed = seed;
        self.data.split_seed = seed.wrapping_add(1);
        self.train.seed = seed;
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("config serialization failed: {e}")))
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.to_string())
}

fn set_dotted(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::Config(format!("override key `{key}`: `{part}` is not a table"))
        })?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Ok(())
}

fn deep_merge(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parse a config: defaults, deep-merged with the file (when given), then
/// `key=value` overrides in order. Unknown keys are hard errors.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut value = toml::Value::try_from(RunConfig::default())
        .map_err(|e| Error::Config(format!("default config serialization failed: {e}")))?;
    if let Some(p) = path {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let file_value: toml::Value = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("config parse error in {}: {e}", p.display())))?;
        deep_merge(&mut value, file_value);
    }
    for item in overrides {
        let (key, raw) = item.split_once('=').ok_or_else(|| {
            Error::Config(format!("override `{item}` is not of the form key=value"))
        })?;
        set_dotted(&mut value, key.trim(), parse_override_value(raw.trim()))?;
    }
    let config: RunConfig = value
        .try_into()
        .map_err(|e| Error::Config(format!("config does not match the schema: {e}")))?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn overrides_reach_nested_fields() {
        let cfg = load_config(
            None,
            &[
                "train.max_steps=50".to_string(),
                "train.preset=UNet_CE".to_string(),
                "data.style_b.blur_sigma=0.5".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.train.max_steps, 50);
        assert_eq!(cfg.train.preset, crate::trainer::ModelPreset::UNetCe);
        assert_eq!(cfg.data.style_b.blur_sigma, 0.5);
    }

    #[test]
    fn bad_override_shape_is_a_config_error() {
        assert!(matches!(
            load_config(None, &["train.max_steps".to_string()]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            load_config(None, &["train.nonsense=1".to_string()]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn master_seed_fans_out() {
        let mut cfg = RunConfig::default();
        cfg.apply_master_seed(99);
        assert_eq!(cfg.data.spec.seed, 99);
        assert_eq!(cfg.train.seed, 99);
        assert_eq!(cfg.data.split_seed, 100);
    }

    #[test]
    fn toml_roundtrip_preserves_config() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.train, cfg.train);
        assert_eq!(back.data.spec, cfg.data.spec);
    }
}
