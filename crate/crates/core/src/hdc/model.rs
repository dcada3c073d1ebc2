use serde::{Deserialize, Serialize};

use super::hypervector::{cosine_from_parts, norm};
use crate::error::{check_len, HdError, Result};
use crate::matrix::Matrix;

/// Class prototypes `C_1..C_k` with cached Euclidean norms.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    classes: Matrix,
    norms: Vec<f64>,
    labels: Vec<String>,
}

impl ClassModel {
    /// An all-zero model with `labels.len()` classes.
    pub fn zeros(labels: Vec<String>, dim: usize) -> Result<Self> {
        Self::from_classes(Matrix::zeros(labels.len(), dim), labels)
    }

    pub fn from_classes(classes: Matrix, labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(HdError::invalid(format!(
                "a class model needs at least 2 classes, got {}",
                labels.len()
            )));
        }
        check_len("class model labels", classes.rows(), labels.len())?;
        if classes.cols() == 0 {
            return Err(HdError::invalid("class hypervectors must have D >= 1"));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(HdError::invalid("class labels must be distinct"));
        }
        if !classes.all_finite() {
            return Err(HdError::NonFinite("class hypervector entry".into()));
        }
        let norms = classes.iter_rows().map(norm).collect();
        Ok(Self {
            classes,
            norms,
            labels,
        })
    }

    /// Model whose labels are the decimal class ids `0..k`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let labels = (0..rows.len()).map(|l| l.to_string()).collect();
        Self::from_classes(Matrix::from_rows(rows)?, labels)
    }

    pub fn num_classes(&self) -> usize {
        self.classes.rows()
    }

    pub fn dim(&self) -> usize {
        self.classes.cols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn class(&self, l: usize) -> &[f64] {
        self.classes.row(l)
    }

    pub fn classes(&self) -> &Matrix {
        &self.classes
    }

    pub fn norm(&self, l: usize) -> f64 {
        self.norms[l]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub(crate) fn check_class(&self, l: usize) -> Result<()> {
        if l < self.num_classes() {
            Ok(())
        } else {
            Err(HdError::invalid(format!(
                "class id {l} out of range for {} classes",
                self.num_classes()
            )))
        }
    }

    /// Cosine similarity of `h` to every class, using the cached norms.
    pub fn similarity_scores(&self, h: &[f64]) -> Result<Vec<f64>> {
        check_len("similarity_scores", self.dim(), h.len())?;
        let mut out = vec![0.0; self.num_classes()];
        self.scores_into(h, &mut out);
        Ok(out)
    }

    /// Unchecked scoring; `h.len() == D` and `out.len() == k`.
    pub(crate) fn scores_into(&self, h: &[f64], out: &mut [f64]) {
        let hn = norm(h);
        for (l, o) in out.iter_mut().enumerate() {
            let d = super::hypervector::dot(h, self.classes.row(l));
            *o = cosine_from_parts(d, hn, self.norms[l]);
        }
    }

    /// `C_l += coeff * h`, then refreshes the norm of class `l`.
    pub(crate) fn add_scaled(&mut self, l: usize, coeff: f64, h: &[f64]) {
        for (c, v) in self.classes.row_mut(l).iter_mut().zip(h) {
            *c += coeff * v;
        }
        self.norms[l] = norm(self.classes.row(l));
    }

    /// Resets the listed dimensions to zero in every class.
    pub fn zero_dims(&mut self, dims: &[usize]) -> Result<()> {
        if let Some(i) = dims.iter().find(|&&i| i >= self.dim()) {
            return Err(HdError::invalid(format!(
                "dimension index {i} out of range for D = {}",
                self.dim()
            )));
        }
        for l in 0..self.num_classes() {
            let row = self.classes.row_mut(l);
            for &i in dims {
                row[i] = 0.0;
            }
        }
        self.recompute_norms();
        Ok(())
    }

    pub fn recompute_norms(&mut self) {
        self.norms = self.classes.iter_rows().map(norm).collect();
    }

    /// True when every cached norm matches a fresh recomputation within
    /// `rel_tol` relative error.
    pub fn norms_consistent(&self, rel_tol: f64) -> bool {
        self.classes.iter_rows().zip(&self.norms).all(|(row, &cached)| {
            let fresh = norm(row);
            (fresh - cached).abs() <= rel_tol * fresh.max(cached).max(f64::MIN_POSITIVE)
        })
    }

    pub fn is_finite(&self) -> bool {
        self.classes.all_finite()
    }

    pub fn replace_classes(&mut self, classes: Matrix) -> Result<()> {
        check_len("replace_classes rows", self.num_classes(), classes.rows())?;
        check_len("replace_classes dim", self.dim(), classes.cols())?;
        self.classes = classes;
        self.recompute_norms();
        Ok(())
    }
}

/// Serializable snapshot of a class model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModelState {
    pub dim: usize,
    pub labels: Vec<String>,
    /// Row-major k×D class matrix.
    pub classes: Vec<f64>,
}

impl From<&ClassModel> for ClassModelState {
    fn from(m: &ClassModel) -> Self {
        Self {
            dim: m.dim(),
            labels: m.labels.clone(),
            classes: m.classes.as_slice().to_vec(),
        }
    }
}

impl TryFrom<ClassModelState> for ClassModel {
    type Error = HdError;

    fn try_from(s: ClassModelState) -> Result<Self> {
        let classes = Matrix::from_vec(s.labels.len(), s.dim, s.classes)?;
        ClassModel::from_classes(classes, s.labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdc::cosine_similarity;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn needs_two_distinct_classes() {
        assert!(ClassModel::from_rows(&[[1.0, 0.0]]).is_err());
        let m = Matrix::zeros(2, 3);
        assert!(ClassModel::from_classes(m, vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn exact_class_scores_one() {
        let m = ClassModel::from_rows(&[[1.0, 2.0, 0.0], [0.0, -1.0, 3.0], [2.0, 2.0, 2.0]]).unwrap();
        let s = m.similarity_scores(m.class(1)).unwrap();
        assert!((s[1] - 1.0).abs() < 1e-15);
        assert!(s[1] >= s[0] && s[1] >= s[2]);
    }

    #[test]
    fn orthogonal_query_scores_zero() {
        let m = ClassModel::from_rows(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(m.similarity_scores(&[0.0, 0.0, 5.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn scores_match_scalar_cosine() {
        let mut r = rng::stream(12, "test");
        let rows: Vec<Vec<f64>> = (0..3).map(|_| (0..8).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let m = ClassModel::from_rows(&rows).unwrap();
        let h: Vec<f64> = (0..8).map(|_| r.random_range(-1.0..1.0)).collect();
        let s = m.similarity_scores(&h).unwrap();
        for (l, row) in rows.iter().enumerate() {
            assert_eq!(s[l], cosine_similarity(&h, row).unwrap());
        }
    }

    #[test]
    fn dimension_mismatch() {
        let m = ClassModel::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(m.similarity_scores(&[1.0]), Err(HdError::Dimension { .. })));
    }

    #[test]
    fn zeroing_refreshes_norms() {
        let mut m = ClassModel::from_rows(&[[3.0, 4.0], [1.0, 1.0]]).unwrap();
        m.zero_dims(&[1]).unwrap();
        assert_eq!(m.class(0), &[3.0, 0.0]);
        assert_eq!(m.norm(0), 3.0);
        assert!(m.norms_consistent(1e-9));
        assert!(m.zero_dims(&[2]).is_err());
    }
}
