//! Selection of undesired dimensions from top-2 triage results.
//!
//! Each partially correct sample contributes one row to `M` and each
//! incorrect sample one row to `N`. Rows are L2-normalized and summed
//! column-wise into the 1×D scores `M'` and `N'`; a dimension is undesired
//! when it ranks in the top `⌊R% · D⌋` of both.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, HdError, Result};
use crate::hdc::{norm, ClassModel};
use crate::learner::inference::{classify_outcome, Outcome, TriageCounts};
use crate::matrix::Matrix;

/// Weights applied to the per-dimension distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    /// Weight on the distance to the true class.
    pub alpha: f64,
    /// Weight on the distance to the top-1 (wrong) class.
    pub beta: f64,
    /// Weight on the distance to the top-2 class of an incorrect sample.
    pub theta: f64,
}

impl Weights {
    pub fn new(alpha: f64, beta: f64, theta: f64) -> Result<Self> {
        let w = Self { alpha, beta, theta };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("theta", self.theta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HdError::invalid(format!("{name} must be a positive real, got {v}")));
            }
        }
        if self.theta >= self.beta {
            return Err(HdError::invalid(format!(
                "theta must be smaller than beta (theta = {}, beta = {})",
                self.theta, self.beta
            )));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            alpha: self.alpha * s,
            beta: self.beta * s,
            theta: self.theta * s,
        }
    }
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            theta: 0.5,
        }
    }
}

/// Which sign structure to use for rows of `N`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NFormula {
    /// `α|H − C_true| − β|H − C_top1| − θ|H − C_top2|`
    #[default]
    Prose,
    /// `α|H − C_top1| + β|H − C_top2| − θ|H − C_true|`
    Listing,
}

impl std::str::FromStr for NFormula {
    type Err = HdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prose" => Ok(Self::Prose),
            "listing" => Ok(Self::Listing),
            other => Err(HdError::invalid(format!("unknown N formula `{other}`"))),
        }
    }
}

/// `α·|h − c_true| − β·|h − c_top1|`, elementwise.
pub fn partial_row(h: &[f64], c_true: &[f64], c_top1: &[f64], alpha: f64, beta: f64) -> Result<Vec<f64>> {
    check_len("partial_row c_true", h.len(), c_true.len())?;
    check_len("partial_row c_top1", h.len(), c_top1.len())?;
    Ok(h.iter()
        .zip(c_true)
        .zip(c_top1)
        .map(|((&x, &t), &w)| alpha * (x - t).abs() - beta * (x - w).abs())
        .collect())
}

/// Row of `N` for an incorrect sample, elementwise.
pub fn incorrect_row(
    h: &[f64],
    c_true: &[f64],
    c_top1: &[f64],
    c_top2: &[f64],
    weights: &Weights,
    formula: NFormula,
) -> Result<Vec<f64>> {
    check_len("incorrect_row c_true", h.len(), c_true.len())?;
    check_len("incorrect_row c_top1", h.len(), c_top1.len())?;
    check_len("incorrect_row c_top2", h.len(), c_top2.len())?;
    let Weights { alpha, beta, theta } = *weights;
    Ok((0..h.len())
        .map(|d| {
            let to_true = (h[d] - c_true[d]).abs();
            let to_top1 = (h[d] - c_top1[d]).abs();
            let to_top2 = (h[d] - c_top2[d]).abs();
            match formula {
                NFormula::Prose => alpha * to_true - beta * to_top1 - theta * to_top2,
                NFormula::Listing => alpha * to_top1 + beta * to_top2 - theta * to_true,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// `M`: rows from partially correct samples.
    Partial,
    /// `N`: rows from incorrect samples.
    Incorrect,
}

/// Stack of length-D distance rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    kind: RowKind,
    dim: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(kind: RowKind, dim: usize) -> Self {
        Self {
            kind,
            dim,
            data: Vec::new(),
        }
    }

    pub fn kind(&self) -> RowKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        check_len("distance row", self.dim, row.len())?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(HdError::NonFinite("distance matrix row".into()));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    /// Column-wise sum of the L2-normalized rows. Zero rows contribute
    /// nothing.
    pub fn aggregate(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        for i in 0..self.rows() {
            let row = self.row(i);
            let n = norm(row);
            if n == 0.0 {
                continue;
            }
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v / n;
            }
        }
        acc
    }
}

/// `⌊R% · D⌋`.
pub fn nominal_count(rate_percent: f64, dim: usize) -> usize {
    // epsilon absorbs rounding in R·D/100, e.g. 7% of 100
    let scaled = (rate_percent * dim as f64 / 100.0 + 1e-9).floor();
    (scaled.max(0.0) as usize).min(dim)
}

/// Dimensions chosen for regeneration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndesiredSet {
    /// Ascending dimension indices.
    pub dims: Vec<usize>,
    /// Candidates taken from each side before intersecting.
    pub nominal_count: usize,
}

impl UndesiredSet {
    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }
}

/// Indices of the `count` largest entries, ties toward the lower index.
fn top_indices(scores: &[f64], count: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..scores.len()).collect();
    ids.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    ids.truncate(count);
    ids
}

/// Intersection of the top-`⌊R%·D⌋` dimensions of two aggregated scores.
pub fn select_from_scores(m_prime: &[f64], n_prime: &[f64], rate_percent: f64) -> Result<UndesiredSet> {
    check_len("select_from_scores", m_prime.len(), n_prime.len())?;
    check_rate(rate_percent)?;
    let count = nominal_count(rate_percent, m_prime.len());
    let from_m = top_indices(m_prime, count);
    let mut in_n = vec![false; n_prime.len()];
    for i in top_indices(n_prime, count) {
        in_n[i] = true;
    }
    let mut dims: Vec<usize> = from_m.into_iter().filter(|&i| in_n[i]).collect();
    dims.sort_unstable();
    Ok(UndesiredSet {
        dims,
        nominal_count: count,
    })
}

fn check_rate(rate_percent: f64) -> Result<()> {
    if rate_percent > 0.0 && rate_percent <= 100.0 {
        Ok(())
    } else {
        Err(HdError::invalid(format!(
            "regeneration rate must lie in (0, 100], got {rate_percent}"
        )))
    }
}

/// Normalizes, aggregates and intersects `M` and `N`. An empty side
/// yields an empty set.
pub fn select_undesired(
    m: &DistanceMatrix,
    n: &DistanceMatrix,
    rate_percent: f64,
    dim: usize,
) -> Result<UndesiredSet> {
    check_rate(rate_percent)?;
    check_len("select_undesired M", dim, m.dim())?;
    check_len("select_undesired N", dim, n.dim())?;
    if m.is_empty() || n.is_empty() {
        return Ok(UndesiredSet {
            dims: Vec::new(),
            nominal_count: nominal_count(rate_percent, dim),
        });
    }
    select_from_scores(&m.aggregate(), &n.aggregate(), rate_percent)
}

/// Everything one regeneration analysis produced.
#[derive(Debug, Clone)]
pub struct RegenAnalysis {
    pub counts: TriageCounts,
    pub m: DistanceMatrix,
    pub n: DistanceMatrix,
    pub m_prime: Vec<f64>,
    pub n_prime: Vec<f64>,
    pub undesired: UndesiredSet,
}

/// Triages every encoded sample against `model` and builds `M`, `N` and the
/// undesired set.
pub fn analyze(
    model: &ClassModel,
    encoded: &Matrix,
    labels: &[usize],
    weights: &Weights,
    formula: NFormula,
    rate_percent: f64,
) -> Result<RegenAnalysis> {
    check_len("analyze labels", encoded.rows(), labels.len())?;
    let dim = model.dim();
    if encoded.rows() > 0 {
        check_len("analyze dim", dim, encoded.cols())?;
    }
    let mut m = DistanceMatrix::new(RowKind::Partial, dim);
    let mut n = DistanceMatrix::new(RowKind::Incorrect, dim);
    let mut counts = TriageCounts::default();
    let mut scores = vec![0.0; model.num_classes()];
    for (h, &truth) in encoded.iter_rows().zip(labels) {
        model.check_class(truth)?;
        model.scores_into(h, &mut scores);
        let outcome = classify_outcome(&scores, truth);
        counts.record(&outcome);
        match outcome {
            Outcome::Correct => {}
            Outcome::PartiallyCorrect { top1 } => {
                let row = partial_row(h, model.class(truth), model.class(top1), weights.alpha, weights.beta)?;
                m.push_row(&row)?;
            }
            Outcome::Incorrect { top1, top2 } => {
                let row = incorrect_row(
                    h,
                    model.class(truth),
                    model.class(top1),
                    model.class(top2),
                    weights,
                    formula,
                )?;
                n.push_row(&row)?;
            }
        }
    }
    let m_prime = m.aggregate();
    let n_prime = n.aggregate();
    let undesired = select_undesired(&m, &n, rate_percent, dim)?;
    Ok(RegenAnalysis {
        counts,
        m,
        n,
        m_prime,
        n_prime,
        undesired,
    })
}

/// Writes `dim,m_prime,n_prime,selected` rows for one iteration.
pub fn write_scores_csv<W: Write>(out: W, analysis: &RegenAnalysis) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| HdError::Io(std::io::Error::other(e));
    w.write_record(["dim", "m_prime", "n_prime", "selected"]).map_err(io)?;
    let mut selected = vec![false; analysis.m_prime.len()];
    for &d in &analysis.undesired.dims {
        selected[d] = true;
    }
    for d in 0..analysis.m_prime.len() {
        w.write_record([
            d.to_string(),
            analysis.m_prime[d].to_string(),
            analysis.n_prime[d].to_string(),
            u8::from(selected[d]).to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
