use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{check_len, HdError, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Per-feature `(x - mean) / sd`.
    #[default]
    Zscore,
    /// Per-feature `(x - min) / (max - min)`.
    Minmax,
}

impl std::str::FromStr for NormMode {
    type Err = HdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zscore" => Ok(Self::Zscore),
            "minmax" => Ok(Self::Minmax),
            other => Err(HdError::invalid(format!("unknown normalization `{other}` (zscore|minmax)"))),
        }
    }
}

/// Gain that keeps the encoder's projections `B·x` of standardized inputs
/// at a standard deviation of 1/4, inside the near-linear range of the
/// encoder nonlinearity.
pub fn projection_gain(n_features: usize) -> f64 {
    1.0 / (4.0 * (n_features.max(1) as f64).sqrt())
}

/// Per-feature affine map fitted on a training split, followed by a global
/// `gain`: `y = gain * ((x - center) / scale + offset)`.
///
/// Constant features get `scale = 0` and map to the neutral value (0 for
/// z-score, 0.5 for min-max).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub mode: NormMode,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    pub gain: f64,
}

impl NormalizationSpec {
    pub fn fit(train: &Dataset, mode: NormMode) -> Result<Self> {
        if train.is_empty() {
            return Err(HdError::invalid("cannot fit a normalizer on an empty dataset"));
        }
        let n = train.num_features();
        let m = train.len() as f64;
        let mut center = vec![0.0; n];
        let mut scale = vec![0.0; n];
        match mode {
            NormMode::Zscore => {
                for row in train.features.iter_rows() {
                    for (c, v) in center.iter_mut().zip(row) {
                        *c += v;
                    }
                }
                center.iter_mut().for_each(|c| *c /= m);
                for row in train.features.iter_rows() {
                    for j in 0..n {
                        scale[j] += (row[j] - center[j]).powi(2);
                    }
                }
                scale.iter_mut().for_each(|s| *s = (*s / m).sqrt());
            }
            NormMode::Minmax => {
                let mut lo = vec![f64::INFINITY; n];
                let mut hi = vec![f64::NEG_INFINITY; n];
                for row in train.features.iter_rows() {
                    for j in 0..n {
                        lo[j] = lo[j].min(row[j]);
                        hi[j] = hi[j].max(row[j]);
                    }
                }
                center = lo;
                scale = hi.iter().zip(&center).map(|(h, l)| h - l).collect();
            }
        }
        let constant: Vec<usize> = (0..n).filter(|&j| scale[j] <= f64::EPSILON * center[j].abs().max(1.0)).collect();
        for &j in &constant {
            scale[j] = 0.0;
        }
        if !constant.is_empty() {
            log::warn!("constant feature columns {constant:?} map to a fixed value");
        }
        Ok(Self {
            mode,
            center,
            scale,
            gain: 1.0,
        })
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    fn neutral(&self) -> f64 {
        match self.mode {
            NormMode::Zscore => 0.0,
            NormMode::Minmax => 0.5,
        }
    }

    pub fn apply_row(&self, row: &mut [f64]) {
        let neutral = self.neutral();
        for ((v, c), s) in row.iter_mut().zip(&self.center).zip(&self.scale) {
            let unit = if *s == 0.0 { neutral } else { (*v - c) / s };
            *v = self.gain * unit;
        }
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        check_len("normalizer features", self.center.len(), ds.num_features())?;
        let mut out = ds.clone();
        for i in 0..out.features.rows() {
            self.apply_row(out.features.row_mut(i));
        }
        if !out.features.all_finite() {
            return Err(HdError::NonFinite("normalized feature".into()));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
