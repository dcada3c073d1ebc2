//! Argmax inference, ranked top-k labels and top-2 outcome triage.
//!
//! Ties are always broken toward the lower class index.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, HdError, Result};
use crate::hdc::ClassModel;

/// Index of the largest score; the first one wins on ties.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Indices of the two largest scores, in rank order. Requires `len >= 2`.
pub(crate) fn top2(scores: &[f64]) -> (usize, usize) {
    let first = argmax(scores);
    let mut second = usize::from(first == 0);
    for (i, &s) in scores.iter().enumerate() {
        if i != first && s > scores[second] {
            second = i;
        }
    }
    (first, second)
}

/// Class ids ordered by descending score, ascending id on ties.
pub(crate) fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..scores.len()).collect();
    ids.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    ids
}

pub fn predict(model: &ClassModel, h: &[f64]) -> Result<usize> {
    Ok(argmax(&model.similarity_scores(h)?))
}

/// The `k` most similar class ids, best first.
pub fn top_k(model: &ClassModel, h: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > model.num_classes() {
        return Err(HdError::invalid(format!(
            "top-k needs 1 <= k <= {}, got {k}",
            model.num_classes()
        )));
    }
    let mut ids = ranking(&model.similarity_scores(h)?);
    ids.truncate(k);
    Ok(ids)
}

/// Where the true label lands among the two most similar classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Correct,
    /// True label ranked second; carries the top-1 class.
    PartiallyCorrect { top1: usize },
    /// True label outside the top two.
    Incorrect { top1: usize, top2: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeTriage {
    pub true_label: usize,
    pub outcome: Outcome,
}

pub(crate) fn classify_outcome(scores: &[f64], true_label: usize) -> Outcome {
    let (first, second) = top2(scores);
    if first == true_label {
        Outcome::Correct
    } else if second == true_label {
        Outcome::PartiallyCorrect { top1: first }
    } else {
        Outcome::Incorrect {
            top1: first,
            top2: second,
        }
    }
}

pub fn triage(model: &ClassModel, h: &[f64], true_label: usize) -> Result<OutcomeTriage> {
    model.check_class(true_label)?;
    let scores = model.similarity_scores(h)?;
    Ok(OutcomeTriage {
        true_label,
        outcome: classify_outcome(&scores, true_label),
    })
}

/// Tally of a triage pass over a dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriageCounts {
    pub correct: usize,
    pub partially_correct: usize,
    pub incorrect: usize,
}

impl TriageCounts {
    pub fn total(&self) -> usize {
        self.correct + self.partially_correct + self.incorrect
    }

    pub(crate) fn record(&mut self, o: &Outcome) {
        match o {
            Outcome::Correct => self.correct += 1,
            Outcome::PartiallyCorrect { .. } => self.partially_correct += 1,
            Outcome::Incorrect { .. } => self.incorrect += 1,
        }
    }
}

/// Triage of every row of an encoded set.
pub fn triage_all(
    model: &ClassModel,
    encoded: &crate::matrix::Matrix,
    labels: &[usize],
) -> Result<Vec<OutcomeTriage>> {
    check_len("triage labels", encoded.rows(), labels.len())?;
    encoded
        .iter_rows()
        .zip(labels)
        .map(|(h, &l)| triage(model, h, l))
        .collect()
}

/// Predicted class for every row.
pub fn predict_all(model: &ClassModel, encoded: &crate::matrix::Matrix) -> Result<Vec<usize>> {
    if encoded.rows() > 0 {
        check_len("predict_all", model.dim(), encoded.cols())?;
    }
    let mut scores = vec![0.0; model.num_classes()];
    Ok(encoded
        .iter_rows()
        .map(|h| {
            model.scores_into(h, &mut scores);
            argmax(&scores)
        })
        .collect())
}
