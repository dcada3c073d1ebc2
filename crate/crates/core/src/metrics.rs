//! Accuracy, top-k accuracy, confusion matrices, per-class sensitivity and
//! specificity, and one-vs-rest ROC curves.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, HdError, Result};
use crate::hdc::ClassModel;
use crate::learner::inference::{argmax, ranking};
use crate::matrix::Matrix;

/// Fraction of positions where `pred` and `truth` agree.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    check_len("accuracy", truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(HdError::invalid("accuracy of an empty set"));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Fraction of samples whose true label is among the `k` most similar classes.
pub fn top_k_accuracy(model: &ClassModel, encoded: &Matrix, truth: &[usize], k: usize) -> Result<f64> {
    Ok(top_k_accuracies(model, encoded, truth, &[k])?[0])
}

/// Top-k accuracy for several `k` with a single scoring pass.
pub fn top_k_accuracies(model: &ClassModel, encoded: &Matrix, truth: &[usize], ks: &[usize]) -> Result<Vec<f64>> {
    check_len("top_k_accuracy labels", encoded.rows(), truth.len())?;
    if truth.is_empty() {
        return Err(HdError::invalid("top-k accuracy of an empty set"));
    }
    check_len("top_k_accuracy dim", model.dim(), encoded.cols())?;
    let classes = model.num_classes();
    if let Some(&bad) = ks.iter().find(|&&k| k == 0 || k > classes) {
        return Err(HdError::invalid(format!("top-k needs 1 <= k <= {classes}, got {bad}")));
    }
    let mut hits = vec![0usize; ks.len()];
    let mut scores = vec![0.0; classes];
    for (h, &t) in encoded.iter_rows().zip(truth) {
        model.check_class(t)?;
        model.scores_into(h, &mut scores);
        let rank = ranking(&scores).iter().position(|&c| c == t).unwrap_or(classes);
        for (hit, &k) in hits.iter_mut().zip(ks) {
            *hit += usize::from(rank < k);
        }
    }
    Ok(hits.into_iter().map(|h| h as f64 / truth.len() as f64).collect())
}

/// Counts indexed by (true class, predicted class).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        Self {
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let k = counts.len();
        if counts.iter().any(|r| r.len() != k) {
            return Err(HdError::invalid("confusion matrix must be square"));
        }
        Ok(Self { counts })
    }

    pub fn from_predictions(pred: &[usize], truth: &[usize], k: usize) -> Result<Self> {
        check_len("confusion matrix", truth.len(), pred.len())?;
        let mut cm = Self::new(k);
        for (&p, &t) in pred.iter().zip(truth) {
            if p >= k || t >= k {
                return Err(HdError::invalid(format!("class id out of range for {k} classes")));
            }
            cm.counts[t][p] += 1;
        }
        Ok(cm)
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth][pred]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }
}

/// One-vs-rest rates for a class. `None` marks a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRates {
    pub class: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

/// TP / (TP + FN) and TN / (TN + FP) for `class` against all others.
pub fn sensitivity_specificity(cm: &ConfusionMatrix, class: usize) -> Result<ClassRates> {
    if class >= cm.num_classes() {
        return Err(HdError::invalid(format!(
            "class {class} out of range for {} classes",
            cm.num_classes()
        )));
    }
    let tp = cm.get(class, class);
    let fn_ = cm.row_sum(class) - tp;
    let fp = cm.col_sum(class) - tp;
    let tn = cm.total() - tp - fn_ - fp;
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    Ok(ClassRates {
        class,
        sensitivity: ratio(tp, tp + fn_),
        specificity: ratio(tn, tn + fp),
    })
}

pub fn per_class_rates(cm: &ConfusionMatrix) -> Vec<ClassRates> {
    (0..cm.num_classes())
        .map(|c| sensitivity_specificity(cm, c).expect("class in range"))
        .collect()
}

/// Macro averages over the classes where each rate is defined.
pub fn macro_rates(cm: &ConfusionMatrix) -> (Option<f64>, Option<f64>) {
    let rates = per_class_rates(cm);
    let mean = |vals: Vec<f64>| (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
    (
        mean(rates.iter().filter_map(|r| r.sensitivity).collect()),
        mean(rates.iter().filter_map(|r| r.specificity).collect()),
    )
}

/// Reduction of a multi-class score vector to a single target-class score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    /// Own-class similarity minus the best other-class similarity.
    #[default]
    Margin,
    /// Own-class similarity.
    Raw,
}

impl std::str::FromStr for ScoreKind {
    type Err = HdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "margin" => Ok(Self::Margin),
            "raw" => Ok(Self::Raw),
            other => Err(HdError::invalid(format!("unknown score kind `{other}` (margin|raw)"))),
        }
    }
}

/// Per-sample score for `class` under the chosen reduction.
pub fn one_vs_rest_scores(model: &ClassModel, encoded: &Matrix, class: usize, kind: ScoreKind) -> Result<Vec<f64>> {
    model.check_class(class)?;
    if encoded.rows() > 0 {
        check_len("one_vs_rest_scores", model.dim(), encoded.cols())?;
    }
    let mut scores = vec![0.0; model.num_classes()];
    Ok(encoded
        .iter_rows()
        .map(|h| {
            model.scores_into(h, &mut scores);
            let own = scores[class];
            match kind {
                ScoreKind::Raw => own,
                ScoreKind::Margin => {
                    let other = scores
                        .iter()
                        .enumerate()
                        .filter(|&(c, _)| c != class)
                        .map(|(_, &s)| s)
                        .fold(f64::NEG_INFINITY, f64::max);
                    own - other
                }
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// (false-positive rate, true-positive rate), FPR non-decreasing.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    /// Two-column `fpr,tpr` CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| HdError::Io(std::io::Error::other(e));
        w.write_record(["fpr", "tpr"]).map_err(io)?;
        for (fpr, tpr) in &self.points {
            w.write_record([fpr.to_string(), tpr.to_string()]).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Threshold sweep over the distinct score values, highest first. Samples
/// sharing a score enter together, so ties produce a diagonal step.
pub fn roc_curve(scores: &[f64], truth: &[bool]) -> Result<RocCurve> {
    check_len("roc_curve", scores.len(), truth.len())?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(HdError::NonFinite("ROC score".into()));
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(HdError::invalid("ROC needs at least one positive and one negative sample"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = trapezoid(&points);
    Ok(RocCurve { points, auc })
}

fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
}

/// Evaluation summary of a model on an encoded labelled set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    pub accuracy: f64,
    /// (k, top-k accuracy) pairs in request order.
    pub top_k: Vec<(usize, f64)>,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassRates>,
    pub macro_sensitivity: Option<f64>,
    pub macro_specificity: Option<f64>,
}

pub fn evaluate(model: &ClassModel, encoded: &Matrix, truth: &[usize], ks: &[usize]) -> Result<MetricsReport> {
    let tops = top_k_accuracies(model, encoded, truth, ks)?;
    let mut scores = vec![0.0; model.num_classes()];
    let pred: Vec<usize> = encoded
        .iter_rows()
        .map(|h| {
            model.scores_into(h, &mut scores);
            argmax(&scores)
        })
        .collect();
    let confusion = ConfusionMatrix::from_predictions(&pred, truth, model.num_classes())?;
    let (macro_sensitivity, macro_specificity) = macro_rates(&confusion);
    Ok(MetricsReport {
        samples: truth.len(),
        accuracy: accuracy(&pred, truth)?,
        top_k: ks.iter().copied().zip(tops).collect(),
        per_class: per_class_rates(&confusion),
        confusion,
        macro_sensitivity,
        macro_specificity,
    })
}
