use std::path::{Path, PathBuf};

use dynhd::data::{CsvOptions, LabelColumn, NormMode};
use dynhd::learner::TrainConfig;
use dynhd::metrics::ScoreKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Everything a command reads: defaults, then the config file, then flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; `train.seed` is forced to this value.
    pub seed: u64,
    pub data: DataConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub sweep: SweepConfig,
    pub noise: NoiseConfig,
    pub roc: RocConfig,
    pub synth: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data: DataConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            sweep: SweepConfig::default(),
            noise: NoiseConfig::default(),
            roc: RocConfig::default(),
            synth: SynthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train: Option<PathBuf>,
    pub valid: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// `last`, a 0-based column index, or a header name.
    pub label_column: String,
    pub has_header: bool,
    pub delimiter: String,
    pub normalize: NormMode,
    /// Post-normalization gain; omitted means `1 / (4·sqrt(n))`.
    pub gain: Option<f64>,
    /// Train/valid/test fractions applied to the `train` file.
    pub split: [f64; 3],
    pub stratified: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            train: None,
            valid: None,
            test: None,
            label_column: "last".into(),
            has_header: true,
            delimiter: ",".into(),
            normalize: NormMode::Zscore,
            gain: None,
            split: [0.9, 0.1, 0.0],
            stratified: true,
        }
    }
}

impl DataConfig {
    pub fn csv_options(&self) -> CliResult<CsvOptions> {
        let delimiter = match self.delimiter.as_bytes() {
            [b] => *b,
            _ if self.delimiter == "\\t" => b'\t',
            _ => {
                return Err(CliError::Config(format!(
                    "delimiter must be a single byte, got `{}`",
                    self.delimiter
                )))
            }
        };
        let label_column = match self.label_column.as_str() {
            "last" => LabelColumn::Last,
            s => match s.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(s.to_string()),
            },
        };
        Ok(CsvOptions {
            delimiter,
            has_header: self.has_header,
            label_column,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Directory written by `train`.
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub k: Vec<usize>,
    /// Treat feature columns as already-encoded hypervectors.
    pub encoded: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            model: None,
            data: None,
            k: vec![1, 2],
            encoded: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// `[alpha, beta, theta]` triples.
    pub points: Vec<[f64; 3]>,
    pub score: ScoreKind,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            points: vec![[1.0, 1.0, 0.5]],
            score: ScoreKind::Margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Model directories, one per dimensionality.
    pub models: Vec<PathBuf>,
    pub data: Option<PathBuf>,
    /// Dimensionalities to sweep; empty means every supplied model.
    pub dims: Vec<usize>,
    pub bits: Vec<u8>,
    pub rates: Vec<f64>,
    pub trials: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            models: Vec::new(),
            data: None,
            dims: Vec::new(),
            bits: vec![1, 8],
            rates: vec![0.0, 1.0, 5.0, 10.0],
            trials: 30,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RocConfig {
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    /// Target class id; every class when omitted.
    pub class: Option<usize>,
    pub score: ScoreKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub features: usize,
    pub classes: usize,
    pub per_class: usize,
    /// Explicit per-class counts; overrides `classes` and `per_class`.
    pub counts: Vec<usize>,
    pub separation: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            features: 10,
            classes: 4,
            per_class: 250,
            counts: Vec::new(),
            separation: 5.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("cannot serialize config: {e}")))
    }

    /// Applies cross-field rules once every source has been merged.
    pub fn finish(mut self) -> CliResult<Self> {
        self.train.seed = self.seed;
        self.train
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
    }

    #[test]
    fn dotted_sections_and_unknown_keys() {
        let c = RunConfig::from_toml("seed = 3\ntrain.dim = 64\n[data]\nsplit = [0.8, 0.1, 0.1]\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.train.dim, 64);
        assert_eq!(c.data.split, [0.8, 0.1, 0.1]);
        assert!(RunConfig::from_toml("[train]\ndimension = 3\n").is_err());
    }

    #[test]
    fn label_column_forms() {
        let mut d = DataConfig::default();
        assert_eq!(d.csv_options().unwrap().label_column, LabelColumn::Last);
        d.label_column = "2".into();
        assert_eq!(d.csv_options().unwrap().label_column, LabelColumn::Index(2));
        d.label_column = "class".into();
        assert_eq!(d.csv_options().unwrap().label_column, LabelColumn::Name("class".into()));
        d.delimiter = ";;".into();
        assert!(d.csv_options().is_err());
    }
}
