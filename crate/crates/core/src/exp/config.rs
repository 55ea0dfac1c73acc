//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Later assignments
//! override earlier ones, so command-line overrides can simply be applied
//! after the file.

use std::path::{Path, PathBuf};

use super::ablation::{AblationSpec, DEFAULT_COUNTS};
use super::grid::{GridSpec, DEFAULT_BATCH_SIZES, DEFAULT_LEARNING_RATES, DEFAULT_REG_COEFFS};
use super::ExperimentSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub experiment: ExperimentSpec,
    pub grid_reg_coeffs: Vec<f64>,
    pub grid_learning_rates: Vec<f64>,
    pub grid_batch_sizes: Vec<usize>,
    pub ablation_counts: Vec<usize>,
    /// Use every non-gold entity as a negative when an ablation count equals
    /// the number of entities.
    pub ablation_exhaustive: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            experiment: ExperimentSpec::default(),
            grid_reg_coeffs: DEFAULT_REG_COEFFS.to_vec(),
            grid_learning_rates: DEFAULT_LEARNING_RATES.to_vec(),
            grid_batch_sizes: DEFAULT_BATCH_SIZES.to_vec(),
            ablation_counts: DEFAULT_COUNTS.to_vec(),
            ablation_exhaustive: false,
        }
    }
}

/// Splits a config text into `(key, value)` pairs, in file order.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        pairs.push((k.trim().to_owned(), v.trim().to_owned()));
    }
    Ok(pairs)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(|v| parse(key, v.trim()))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected a boolean, got `{value}`"
        ))),
    }
}

impl Settings {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut settings = Settings::default();
        settings.apply_all(parse_config(&text)?)?;
        Ok(settings)
    }

    pub fn apply_all<K: AsRef<str>, V: AsRef<str>>(
        &mut self,
        pairs: impl IntoIterator<Item = (K, V)>,
    ) -> Result<()> {
        for (k, v) in pairs {
            self.set(k.as_ref(), v.as_ref())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let exp = &mut self.experiment;
        let tc = &mut exp.train;
        match key {
            "dataset_dir" => exp.dataset_dir = PathBuf::from(value),
            "model" => exp.model = parse(key, value)?,
            "dim" => exp.dim = parse(key, value)?,
            "simple_variant" => exp.simple_variant = parse(key, value)?,
            "output_dir" | "out" => exp.output_dir = PathBuf::from(value),
            "tag" => exp.tag = value.to_owned(),
            "dev_sample" => {
                exp.dev_sample = match value {
                    "all" => None,
                    _ => Some(parse(key, value)?),
                }
            }
            "lr" | "learning_rate" => tc.learning_rate = parse(key, value)?,
            "reg" => tc.reg_kind = parse(key, value)?,
            "reg_coeff" => tc.reg_coeff = parse(key, value)?,
            "batch_size" => tc.batch_size = parse(key, value)?,
            "negatives" => tc.regime = parse(key, value)?,
            "max_epochs" => tc.max_epochs = parse(key, value)?,
            "patience" => tc.patience = parse(key, value)?,
            "eval_every" => tc.eval_every = parse(key, value)?,
            "reciprocal" => {
                tc.reciprocal = match value {
                    "auto" => None,
                    _ => Some(parse_bool(key, value)?),
                }
            }
            "seed" => tc.seed = parse(key, value)?,
            "chunk" => tc.chunk = parse(key, value)?,
            "exclude_gold" => tc.exclude_gold = parse_bool(key, value)?,
            "record_timing" => tc.record_timing = parse_bool(key, value)?,
            "grid.reg_coeff" => self.grid_reg_coeffs = parse_list(key, value)?,
            "grid.lr" | "grid.learning_rate" => self.grid_learning_rates = parse_list(key, value)?,
            "grid.batch_size" => self.grid_batch_sizes = parse_list(key, value)?,
            "ablation.counts" => self.ablation_counts = parse_list(key, value)?,
            "ablation.exhaustive" => self.ablation_exhaustive = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            base: self.experiment.clone(),
            reg_coeffs: self.grid_reg_coeffs.clone(),
            learning_rates: self.grid_learning_rates.clone(),
            batch_sizes: self.grid_batch_sizes.clone(),
        }
    }

    pub fn ablation_spec(&self) -> AblationSpec {
        AblationSpec {
            base: self.experiment.clone(),
            negative_counts: self.ablation_counts.clone(),
            exhaustive_at_full: self.ablation_exhaustive,
        }
    }
}
