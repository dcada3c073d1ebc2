use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adaptive::adaptive_fit_epoch;
use super::config::{Mode, TrainConfig};
use super::inference::predict_all;
use crate::data::Dataset;
use crate::error::{HdError, Result};
use crate::hdc::{ClassModel, Encoder};
use crate::matrix::Matrix;
use crate::regen::{analyze, nominal_count, RegenAnalysis};
use crate::rng::{self, SHUFFLE_STREAM};

/// `D + D·R%·iters`, where each iteration contributes `⌊R%·D⌋` dimensions.
pub fn effective_dimensionality(dim: usize, rate_percent: f64, iters: usize) -> usize {
    dim + nominal_count(rate_percent, dim) * iters
}

/// One row of a training report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub train_acc: f64,
    /// `None` when no validation split was supplied.
    pub valid_acc: Option<f64>,
    pub updates: usize,
    pub regenerated: usize,
    /// Cumulative D* after this iteration's regeneration.
    pub effective_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub records: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
}

impl TrainReport {
    pub fn final_effective_dim(&self) -> Option<usize> {
        self.records.last().map(|r| r.effective_dim)
    }

    /// One JSON object per iteration.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        String::from_utf8(buf).map_err(|e| HdError::Serialization(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub encoder: Encoder,
    pub model: ClassModel,
    pub report: TrainReport,
}

/// Trains with no per-iteration hook.
pub fn train(config: &TrainConfig, train_set: &Dataset, valid_set: Option<&Dataset>) -> Result<Trained> {
    train_with_observer(config, train_set, valid_set, |_, _| Ok(()))
}

/// Full training loop.
///
/// Each iteration runs one adaptive epoch over the encoded training set and
/// records accuracies. Unless the run stops there, dynamic mode then triages
/// the training set under the updated model, regenerates the undesired
/// dimensions, zeroes them in every class vector and re-encodes only those
/// columns. Training stops after `patience` iterations without a `min_delta`
/// gain in validation accuracy (training accuracy when no validation set is
/// given) or at `max_iters`.
///
/// `observer` sees every record together with the regeneration analysis of
/// that iteration, if one ran.
pub fn train_with_observer<F>(
    config: &TrainConfig,
    train_set: &Dataset,
    valid_set: Option<&Dataset>,
    mut observer: F,
) -> Result<Trained>
where
    F: FnMut(&IterationRecord, Option<&RegenAnalysis>) -> Result<()>,
{
    config.validate()?;
    if train_set.is_empty() {
        return Err(HdError::invalid("training set is empty"));
    }
    let valid_set = valid_set.filter(|v| !v.is_empty());
    if let Some(v) = valid_set {
        if v.num_features() != train_set.num_features() {
            return Err(HdError::Dimension {
                context: "validation features",
                expected: train_set.num_features(),
                found: v.num_features(),
            });
        }
        if v.class_names != train_set.class_names {
            return Err(HdError::invalid("training and validation splits use different label sets"));
        }
    }

    let mut encoder = Encoder::new(train_set.num_features(), config.dim, config.seed)?;
    let mut model = ClassModel::zeros(train_set.class_names.clone(), config.dim)?;
    let mut encoded = encoder.encode_batch(&train_set.features)?;
    let mut valid_encoded = valid_set.map(|v| encoder.encode_batch(&v.features)).transpose()?;
    let weights = config.weights();

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffler = rng::stream(config.seed, SHUFFLE_STREAM);

    let mut records = Vec::new();
    let mut effective_dim = config.dim;
    let mut best = f64::NEG_INFINITY;
    let mut stale = 0;
    let mut converged = false;

    for iteration in 1..=config.max_iters {
        if config.shuffle {
            order.shuffle(&mut shuffler);
        }
        let updates = adaptive_fit_epoch(&mut model, &encoded, &train_set.labels, config.eta, Some(&order))?;
        if !model.is_finite() {
            return Err(HdError::NonFinite(format!("class hypervectors after iteration {iteration}")));
        }
        let train_acc = accuracy_of(&model, &encoded, &train_set.labels)?;
        let valid_acc = match (valid_set, &valid_encoded) {
            (Some(v), Some(e)) => Some(accuracy_of(&model, e, &v.labels)?),
            _ => None,
        };

        let monitored = valid_acc.unwrap_or(train_acc);
        if monitored > best + config.min_delta {
            best = monitored;
            stale = 0;
        } else {
            stale += 1;
        }
        converged = stale >= config.patience;
        let last = converged || iteration == config.max_iters;

        let mut analysis = None;
        if config.mode == Mode::Dynamic && !last {
            let a = analyze(
                &model,
                &encoded,
                &train_set.labels,
                &weights,
                config.n_formula,
                config.regen_rate,
            )?;
            let dims = &a.undesired.dims;
            if !dims.is_empty() {
                encoder.regenerate_dims(dims)?;
                model.zero_dims(dims)?;
                encoder.reencode_dims(&train_set.features, &mut encoded, dims)?;
                if let (Some(v), Some(e)) = (valid_set, valid_encoded.as_mut()) {
                    encoder.reencode_dims(&v.features, e, dims)?;
                }
            }
            effective_dim += dims.len();
            analysis = Some(a);
        }

        let record = IterationRecord {
            iteration,
            train_acc,
            valid_acc,
            updates,
            regenerated: analysis.as_ref().map_or(0, |a| a.undesired.len()),
            effective_dim,
        };
        log::debug!("{record:?}");
        observer(&record, analysis.as_ref())?;
        records.push(record);
        if last {
            break;
        }
    }

    let report = TrainReport {
        iterations: records.len(),
        records,
        converged,
    };
    Ok(Trained { encoder, model, report })
}

fn accuracy_of(model: &ClassModel, encoded: &Matrix, labels: &[usize]) -> Result<f64> {
    let pred = predict_all(model, encoded)?;
    let hits = pred.iter().zip(labels).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_blobs;

    #[test]
    fn effective_dimensionality_examples() {
        assert_eq!(effective_dimensionality(500, 20.0, 35), 4000);
        assert_eq!(effective_dimensionality(321, 15.0, 0), 321);
        assert_eq!(effective_dimensionality(1000, 10.0, 7), 1700);
    }

    #[test]
    fn static_single_iteration() {
        let ds = synth_blobs(4, 3, 40, 4.0, 1).unwrap();
        let cfg = TrainConfig {
            dim: 64,
            mode: Mode::Static,
            max_iters: 1,
            ..TrainConfig::default()
        };
        let t = train(&cfg, &ds, None).unwrap();
        assert_eq!(t.report.iterations, 1);
        assert_eq!(t.report.records[0].regenerated, 0);
        assert_eq!(t.report.final_effective_dim(), Some(64));
    }

    #[test]
    fn dynamic_respects_regeneration_bound() {
        let tr = synth_blobs(6, 4, 60, 2.0, 2).unwrap();
        let va = synth_blobs(6, 4, 20, 2.0, 3).unwrap();
        let cfg = TrainConfig {
            dim: 100,
            max_iters: 8,
            patience: 100,
            ..TrainConfig::default()
        };
        let t = train(&cfg, &tr, Some(&va)).unwrap();
        let cap = nominal_count(cfg.regen_rate, cfg.dim);
        let mut total = cfg.dim;
        for r in &t.report.records {
            assert!(r.regenerated <= cap);
            total += r.regenerated;
            assert_eq!(r.effective_dim, total);
        }
        assert_eq!(t.report.records.last().unwrap().regenerated, 0);
        assert_eq!(t.report.iterations, 8);
        assert!(!t.report.converged);
    }

    #[test]
    fn deterministic_runs() {
        let ds = synth_blobs(5, 3, 50, 1.5, 4).unwrap();
        let cfg = TrainConfig {
            dim: 80,
            max_iters: 6,
            shuffle: true,
            seed: 11,
            ..TrainConfig::default()
        };
        let a = train(&cfg, &ds, None).unwrap();
        let b = train(&cfg, &ds, None).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.encoder, b.encoder);
        assert_eq!(a.model, b.model);
    }

    #[test]
    fn patience_stops_early() {
        let ds = synth_blobs(3, 2, 30, 10.0, 5).unwrap();
        let cfg = TrainConfig {
            dim: 64,
            max_iters: 50,
            patience: 2,
            ..TrainConfig::default()
        };
        let t = train(&cfg, &ds, None).unwrap();
        assert!(t.report.converged);
        assert!(t.report.iterations < 50);
    }

    #[test]
    fn rejects_bad_inputs() {
        let ds = synth_blobs(3, 2, 10, 1.0, 5).unwrap();
        let empty = ds.subset(&[]);
        assert!(train(&TrainConfig::default(), &empty, None).is_err());
        let other = synth_blobs(4, 2, 10, 1.0, 5).unwrap();
        assert!(train(&TrainConfig::default(), &ds, Some(&other)).is_err());
    }

    #[test]
    fn jsonl_has_one_line_per_iteration() {
        let ds = synth_blobs(3, 2, 20, 2.0, 6).unwrap();
        let cfg = TrainConfig {
            dim: 32,
            max_iters: 3,
            patience: 10,
            ..TrainConfig::default()
        };
        let t = train(&cfg, &ds, None).unwrap();
        let text = t.report.to_jsonl().unwrap();
        assert_eq!(text.lines().count(), 3);
        let first: IterationRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first, t.report.records[0]);
    }
}
