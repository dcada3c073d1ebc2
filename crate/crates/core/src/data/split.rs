use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{HdError, Result};
use crate::rng::{self, SPLIT_STREAM};

/// Train/validation/test proportions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Fractions {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self> {
        let f = Self { train, valid, test };
        if [train, valid, test].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(HdError::invalid("split fractions must be non-negative"));
        }
        if train <= 0.0 {
            return Err(HdError::invalid("the training fraction must be positive"));
        }
        if ((train + valid + test) - 1.0).abs() > 1e-9 {
            return Err(HdError::invalid(format!(
                "split fractions must sum to 1, got {}",
                train + valid + test
            )));
        }
        Ok(f)
    }

    fn active(&self) -> usize {
        [self.train, self.valid, self.test].iter().filter(|v| **v > 0.0).count()
    }

    /// Split sizes for `m` items: rounded train and valid counts, with test
    /// taking the remainder.
    fn sizes(&self, m: usize) -> [usize; 3] {
        let train = ((self.train * m as f64).round() as usize).min(m);
        let valid = ((self.valid * m as f64).round() as usize).min(m - train);
        let test = if self.test > 0.0 { m - train - valid } else { 0 };
        // leftovers from rounding go to train when test is disabled
        let train = m - valid - test;
        [train, valid, test]
    }
}

/// Seeded partition into (train, valid, test). Stratified mode shuffles and
/// splits each class separately so class proportions hold within one
/// sample per class.
pub fn split(ds: &Dataset, fractions: Fractions, stratified: bool, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let mut rng = rng::stream(seed, SPLIT_STREAM);
    let mut parts: [Vec<usize>; 3] = Default::default();
    if stratified {
        let active = fractions.active();
        for class in 0..ds.num_classes() {
            let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
            if idx.is_empty() {
                continue;
            }
            if idx.len() < active {
                return Err(HdError::invalid(format!(
                    "class `{}` has {} samples, fewer than the {active} requested splits",
                    ds.class_names[class],
                    idx.len()
                )));
            }
            idx.shuffle(&mut rng);
            let sizes = fractions.sizes(idx.len());
            let mut start = 0;
            for (p, size) in parts.iter_mut().zip(sizes) {
                p.extend_from_slice(&idx[start..start + size]);
                start += size;
            }
        }
        // interleave classes within each split
        for p in parts.iter_mut() {
            p.shuffle(&mut rng);
        }
    } else {
        let mut idx: Vec<usize> = (0..ds.len()).collect();
        idx.shuffle(&mut rng);
        let sizes = fractions.sizes(idx.len());
        let mut start = 0;
        for (p, size) in parts.iter_mut().zip(sizes) {
            p.extend_from_slice(&idx[start..start + size]);
            start += size;
        }
    }
    let [a, b, c] = parts;
    Ok((ds.subset(&a), ds.subset(&b), ds.subset(&c)))
}
