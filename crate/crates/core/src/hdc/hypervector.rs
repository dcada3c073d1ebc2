use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, HdError, Result};

/// A real-valued hypervector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hypervector(Vec<f64>);

impl Hypervector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Draws a random bipolar (±1) hypervector.
    pub fn random_bipolar<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self((0..dim).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|v| v * s).collect())
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for Hypervector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl AsRef<[f64]> for Hypervector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Sequential dot product. Every similarity in the crate goes through this
/// so that batch and single-sample paths agree bit for bit.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine from a precomputed dot product and norms; 0 when either norm is 0.
#[inline]
pub(crate) fn cosine_from_parts(dot: f64, norm_a: f64, norm_b: f64) -> f64 {
    if norm_a == 0.0 || norm_b == 0.0 {
        0.0
    } else {
        dot / (norm_a * norm_b)
    }
}

/// Cosine similarity of two equal-length vectors.
///
/// An all-zero argument yields 0 ("no evidence") instead of an error, which
/// keeps argmax well defined for freshly zeroed class vectors.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    check_len("cosine_similarity", a.len(), b.len())?;
    Ok(cosine_from_parts(dot(a, b), norm(a), norm(b)))
}

/// Elementwise sum of the given hypervectors.
pub fn bundle<H: AsRef<[f64]>>(hs: &[H]) -> Result<Hypervector> {
    let first = hs
        .first()
        .ok_or_else(|| HdError::invalid("bundle of an empty list"))?
        .as_ref();
    let mut acc = first.to_vec();
    for h in &hs[1..] {
        let h = h.as_ref();
        check_len("bundle", acc.len(), h.len())?;
        for (a, v) in acc.iter_mut().zip(h) {
            *a += v;
        }
    }
    Ok(Hypervector(acc))
}

/// Elementwise product.
pub fn bind(a: &[f64], b: &[f64]) -> Result<Hypervector> {
    check_len("bind", a.len(), b.len())?;
    Ok(Hypervector(a.iter().zip(b).map(|(x, y)| x * y).collect()))
}
