//! Datasets: CSV ingestion, normalization, splitting and synthetic blobs.

mod loader;
mod normalize;
mod split;
mod synth;

pub use loader::{load_csv, write_csv, CsvOptions, LabelColumn, LabelMap};
pub use normalize::{projection_gain, NormMode, NormalizationSpec};
pub use split::{split, Fractions};
pub use synth::{nearest_centroid_accuracy, synth_blobs, synth_blobs_with_counts};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, HdError, Result};
use crate::matrix::Matrix;

/// Feature matrix with dense 0-based labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    /// Original label strings; `class_names[id]` names class `id`.
    pub class_names: Vec<String>,
    pub source: Option<String>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        check_len("dataset labels", features.rows(), labels.len())?;
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(HdError::invalid(format!(
                "label {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        if !features.all_finite() {
            return Err(HdError::NonFinite("dataset feature".into()));
        }
        Ok(Self {
            features,
            labels,
            class_names,
            source: None,
        })
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature count n.
    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    /// Class count k.
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            source: self.source.clone(),
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }
}
