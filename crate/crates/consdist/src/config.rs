//! Run configuration parsing: a line-oriented `key = value` format with
//! `#` comments. `seed` and `iterations` are required; everything else
//! falls back to the documented defaults. Unknown and duplicate keys are
//! rejected by name so a typo never silently runs the default.

use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::distill::{Mode, RunConfig};
use crate::embedding::InjectionWeights;

/// What went wrong while loading a config.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid config: {message}")]
    Validation { message: String },
}

/// Reads and parses a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

fn parse_number<T: FromStr>(line: usize, key: &str, value: &str, kind: &str) -> Result<T, ConfigError> {
    value.parse::<T>().map_err(|_| ConfigError::Parse {
        line,
        message: format!("value for `{key}` must be {kind}, got `{value}`"),
    })
}

/// Parses config text. See [`parse_config`].
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::default();
    let mut seed = None;
    let mut iterations = None;
    let (mut w1, mut w2, mut w3) = {
        let d = InjectionWeights::default();
        (d.w1(), d.w2(), d.w3())
    };
    let mut seen: Vec<String> = Vec::new();

    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw_line.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        seen.push(key.to_string());
        match key {
            "seed" => seed = Some(parse_number::<u64>(line, key, value, "an unsigned integer")?),
            "iterations" => {
                iterations = Some(parse_number::<usize>(line, key, value, "a positive integer")?)
            }
            "batch" => config.batch = parse_number(line, key, value, "a positive integer")?,
            "bins" => config.bins = parse_number(line, key, value, "a positive integer")?,
            "dims" => config.dims = parse_number(line, key, value, "a positive integer")?,
            "snapshot_interval" => {
                config.snapshot_interval = parse_number(line, key, value, "a positive integer")?
            }
            "kappa" => config.kappa = parse_number(line, key, value, "a number")?,
            "beta" => config.beta = parse_number(line, key, value, "a number")?,
            "lr" => config.lr = parse_number(line, key, value, "a number")?,
            "w1" => w1 = parse_number(line, key, value, "a number")?,
            "w2" => w2 = parse_number(line, key, value, "a number")?,
            "w3" => w3 = parse_number(line, key, value, "a number")?,
            "mode" => {
                config.mode = Mode::from_str(value).map_err(|e| ConfigError::Parse {
                    line,
                    message: e.to_string(),
                })?
            }
            "lp_enabled" => {
                config.lp_enabled = match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(ConfigError::Parse {
                            line,
                            message: format!(
                                "value for `lp_enabled` must be true or false, got `{other}`"
                            ),
                        })
                    }
                }
            }
            other => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("unknown key `{other}`"),
                })
            }
        }
    }

    config.seed = seed.ok_or(ConfigError::MissingKey("seed"))?;
    config.iterations = iterations.ok_or(ConfigError::MissingKey("iterations"))?;
    config.weights = InjectionWeights::new(w1, w2, w3)
        .map_err(|e| ConfigError::Validation { message: e.to_string() })?;
    config
        .validate()
        .map_err(|e| ConfigError::Validation { message: e.to_string() })?;
    Ok(config)
}

/// Applies a seed override (the `CONSDIST_SEED` environment variable) when
/// present: the value must be a decimal unsigned integer.
pub fn apply_seed_override(config: &mut RunConfig, value: Option<&str>) -> Result<(), ConfigError> {
    if let Some(raw) = value {
        let raw = raw.trim();
        config.seed = raw.parse::<u64>().map_err(|_| ConfigError::Validation {
            message: format!("CONSDIST_SEED must be a decimal unsigned integer, got `{raw}`"),
        })?;
    }
    Ok(())
}
