use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dynhd::data::NormMode;
use dynhd::learner::Mode;
use dynhd::metrics::ScoreKind;
use dynhd::regen::NFormula;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "DYNHD_OUTPUT_ROOT";

#[derive(Debug, Parser)]
#[command(name = "dynhd", version, about = "Hyperdimensional classification with dimension regeneration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it with its report.
    Train(TrainCmd),
    /// Evaluate a trained model on a labelled CSV.
    Eval(EvalCmd),
    /// Train and evaluate once per (alpha, beta, theta) point.
    SweepWeights(SweepCmd),
    /// Bit-flip robustness sweep over quantized class memories.
    Noise(NoiseCmd),
    /// One-vs-rest ROC curves of a trained model.
    Roc(RocCmd),
    /// Generate a Gaussian-blob dataset.
    Synth(SynthCmd),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $DYNHD_OUTPUT_ROOT/<command> or runs/<command>].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl Common {
    pub fn base_config(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }

    pub fn out_dir(&self, command: &str) -> PathBuf {
        if let Some(o) = &self.out {
            return o.clone();
        }
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) => PathBuf::from(root).join(command),
            None => PathBuf::from("runs").join(command),
        }
    }

    pub fn init_threads(&self) -> CliResult<()> {
        if let Some(j) = self.jobs {
            if j == 0 {
                return Err(CliError::Config("--jobs must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build_global()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }
}

fn comma_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

fn split_triple(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = comma_list(s)?;
    v.try_into().map_err(|_| "expected three comma-separated fractions".to_string())
}

fn weight_points(s: &str) -> Result<Vec<[f64; 3]>, String> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let v: Vec<f64> = comma_list(p)?;
            v.try_into()
                .map_err(|_| format!("`{p}`: expected alpha,beta,theta"))
        })
        .collect()
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    /// Training CSV.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Validation CSV; otherwise carved from the training file by --split.
    #[arg(long)]
    pub valid: Option<PathBuf>,
    /// Test CSV.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// `last`, a 0-based index, or a header name.
    #[arg(long)]
    pub label_column: Option<String>,
    /// The CSV files have no header row.
    #[arg(long)]
    pub no_header: bool,
    #[arg(long)]
    pub delimiter: Option<String>,
    #[arg(long)]
    pub normalize: Option<NormMode>,
    #[arg(long)]
    pub gain: Option<f64>,
    /// train,valid,test fractions, e.g. 0.8,0.1,0.1.
    #[arg(long, value_parser = split_triple)]
    pub split: Option<[f64; 3]>,
    #[arg(long)]
    pub stratified: Option<bool>,
}

impl DataArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let d = &mut cfg.data;
        if self.train.is_some() {
            d.train = self.train.clone();
        }
        if self.valid.is_some() {
            d.valid = self.valid.clone();
        }
        if self.test.is_some() {
            d.test = self.test.clone();
        }
        if let Some(l) = &self.label_column {
            d.label_column = l.clone();
        }
        if self.no_header {
            d.has_header = false;
        }
        if let Some(x) = &self.delimiter {
            d.delimiter = x.clone();
        }
        if let Some(n) = self.normalize {
            d.normalize = n;
        }
        if self.gain.is_some() {
            d.gain = self.gain;
        }
        if let Some(s) = self.split {
            d.split = s;
        }
        if let Some(s) = self.stratified {
            d.stratified = s;
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Percent of D considered per side before intersection.
    #[arg(long)]
    pub regen_rate: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub min_delta: Option<f64>,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub n_formula: Option<NFormula>,
    /// Visit training samples in a seeded random order.
    #[arg(long)]
    pub shuffle: bool,
}

impl TrainArgs {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let t = &mut cfg.train;
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { t.$f = v; })* };
        }
        set!(dim, eta, alpha, beta, theta, regen_rate, max_iters, patience, min_delta, mode, n_formula);
        if self.shuffle {
            t.shuffle = true;
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainCmd {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Write per-iteration M', N' and selection CSVs under regen/.
    #[arg(long)]
    pub dump_regen: bool,
}

#[derive(Debug, Args)]
pub struct EvalCmd {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Directory written by `train`.
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    /// Labelled CSV to evaluate.
    #[arg(long = "data")]
    pub dataset: Option<PathBuf>,
    /// Comma-separated k values for top-k accuracy.
    #[arg(long, value_parser = comma_list::<usize>)]
    pub k: Option<::std::vec::Vec<usize>>,
    /// Feature columns are already-encoded hypervectors.
    #[arg(long)]
    pub encoded: bool,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub train: TrainArgs,
    /// Semicolon-separated alpha,beta,theta triples, e.g. "1,1,0.5;2,1,0.5".
    #[arg(long, value_parser = weight_points)]
    pub points: Option<::std::vec::Vec<[f64; 3]>>,
    #[arg(long)]
    pub score: Option<ScoreKind>,
}

#[derive(Debug, Args)]
pub struct NoiseCmd {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    /// Model directory; repeat once per dimensionality.
    #[arg(long = "model-dir")]
    pub model_dirs: Vec<PathBuf>,
    #[arg(long = "data")]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_parser = comma_list::<usize>)]
    pub dims: Option<::std::vec::Vec<usize>>,
    #[arg(long, value_parser = comma_list::<u8>)]
    pub bits: Option<::std::vec::Vec<u8>>,
    /// Comma-separated bit-flip percentages.
    #[arg(long, value_parser = comma_list::<f64>)]
    pub rates: Option<::std::vec::Vec<f64>>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RocCmd {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[arg(long = "data")]
    pub dataset: Option<PathBuf>,
    /// Target class id; every class when omitted.
    #[arg(long)]
    pub class: Option<usize>,
    #[arg(long)]
    pub score: Option<ScoreKind>,
}

#[derive(Debug, Args)]
pub struct SynthCmd {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub features: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Comma-separated per-class counts (imbalanced sets).
    #[arg(long, value_parser = comma_list::<usize>)]
    pub counts: Option<::std::vec::Vec<usize>>,
    #[arg(long)]
    pub separation: Option<f64>,
}
