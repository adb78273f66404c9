use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::model::MixerConfig;
use crate::train::TrainConfig;

/// Network and training settings read from one flat TOML file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub model: MixerConfig,
    pub train: TrainConfig,
}

fn field_names<T: serde::Serialize>(value: &T) -> Vec<String> {
    match serde_json::to_value(value) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

impl RunConfig {
    /// Parses `key = value` lines. Keys are exactly the field names of
    /// [`MixerConfig`] and [`TrainConfig`]; anything else is an error.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let model_keys = field_names(&MixerConfig::default());
        let train_keys = field_names(&TrainConfig::default());
        let mut model = Map::new();
        let mut train = Map::new();
        for (key, value) in table {
            let json = serde_json::to_value(&value)?;
            if model_keys.contains(&key) {
                model.insert(key, json);
            } else if train_keys.contains(&key) {
                train.insert(key, json);
            } else {
                return Err(Error::Config(format!("unknown key `{key}`")));
            }
        }
        let typed = |what: &str, e: serde_json::Error| Error::Config(format!("{what}: {e}"));
        let cfg = RunConfig {
            model: serde_json::from_value(Value::Object(model)).map_err(|e| typed("model", e))?,
            train: serde_json::from_value(Value::Object(train)).map_err(|e| typed("train", e))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        RunConfig::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()
    }

    /// The file form of this configuration, every key present.
    pub fn to_toml(&self) -> Result<String> {
        let mut out = String::new();
        for part in [serde_json::to_value(&self.model)?, serde_json::to_value(&self.train)?] {
            let table: toml::Table = serde_json::from_value(part)?;
            out.push_str(&toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn keys_route_to_their_struct() {
        let cfg = RunConfig::parse("blocks = 3\nepochs = 12\nd2 = 0.0\n").unwrap();
        assert_eq!(cfg.model.blocks, 3);
        assert_eq!(cfg.model.d2, 0.0);
        assert_eq!(cfg.train.epochs, 12);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::parse("epochz = 3").unwrap_err().to_string();
        assert!(err.contains("epochz"), "{err}");
    }

    #[test]
    fn zero_epochs_rejected() {
        assert!(RunConfig::parse("epochs = 0").is_err());
    }

    #[test]
    fn round_trips_through_text() {
        let cfg = RunConfig::parse("hidden_dim = 16\nseed = 9\nlearning_rate = 0.0005\n").unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }
}
