use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::{HdError, Result};
use crate::matrix::Matrix;
use crate::rng::{self, SYNTH_STREAM};

/// Balanced Gaussian blobs: `per_class` samples in each of `k_classes`
/// clusters with unit within-class standard deviation.
pub fn synth_blobs(n_features: usize, k_classes: usize, per_class: usize, separation: f64, seed: u64) -> Result<Dataset> {
    synth_blobs_with_counts(n_features, &vec![per_class; k_classes], separation, seed)
}

/// Gaussian blobs with an explicit sample count per class.
///
/// When `k <= n` the means sit at `(separation / sqrt 2) * e_c`, so every pair
/// is exactly `separation` apart. Otherwise means are random directions
/// rescaled so that the closest pair is exactly `separation` apart. Rows are
/// shuffled.
pub fn synth_blobs_with_counts(n_features: usize, counts: &[usize], separation: f64, seed: u64) -> Result<Dataset> {
    let k = counts.len();
    if n_features == 0 || k == 0 || counts.iter().any(|&c| c == 0) {
        return Err(HdError::invalid("synthetic blobs need n >= 1, k >= 1 and every class count >= 1"));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(HdError::invalid(format!("separation must be non-negative, got {separation}")));
    }
    let mut rng = rng::stream(seed, SYNTH_STREAM);
    let means = class_means(n_features, k, separation, &mut rng);

    let total: usize = counts.iter().sum();
    let mut data = Vec::with_capacity(total * n_features);
    let mut labels = Vec::with_capacity(total);
    for (c, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            data.extend(means.row(c).iter().map(|m| m + Distribution::<f64>::sample(&StandardNormal, &mut rng)));
            labels.push(c);
        }
    }
    let features = Matrix::from_vec(total, n_features, data)?;
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut rng);
    let ds = Dataset::new(features, labels, (0..k).map(|c| c.to_string()).collect())?;
    Ok(ds.subset(&order).with_source(format!("synth:blobs:n={n_features}:k={k}:sep={separation}:seed={seed}")))
}

fn class_means(n: usize, k: usize, separation: f64, rng: &mut impl rand::Rng) -> Matrix {
    let mut means = Matrix::zeros(k, n);
    if separation == 0.0 || k == 1 {
        return means;
    }
    if k <= n {
        let r = separation / std::f64::consts::SQRT_2;
        for c in 0..k {
            means.set(c, c, r);
        }
        return means;
    }
    for v in means.as_mut_slice() {
        *v = StandardNormal.sample(rng);
    }
    let mut closest = f64::INFINITY;
    for a in 0..k {
        for b in a + 1..k {
            let d: f64 = means.row(a).iter().zip(means.row(b)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            closest = closest.min(d);
        }
    }
    let s = separation / closest;
    means.as_mut_slice().iter_mut().for_each(|v| *v *= s);
    means
}

/// Accuracy on `test` of the nearest-centroid rule fitted on `train`
/// (Euclidean distance, ties to the lower class id). Used as an independent
/// difficulty reference for synthetic benchmarks.
pub fn nearest_centroid_accuracy(train: &Dataset, test: &Dataset) -> Result<f64> {
    if train.is_empty() || test.is_empty() {
        return Err(HdError::invalid("nearest-centroid oracle needs non-empty sets"));
    }
    let n = train.num_features();
    let k = train.num_classes();
    let mut centroids = Matrix::zeros(k, n);
    let counts = train.class_counts();
    for (row, &l) in train.features.iter_rows().zip(&train.labels) {
        for (c, v) in centroids.row_mut(l).iter_mut().zip(row) {
            *c += v / counts[l] as f64;
        }
    }
    let mut hits = 0usize;
    for (row, &l) in test.features.iter_rows().zip(&test.labels) {
        let mut best = (f64::INFINITY, 0);
        for c in (0..k).filter(|&c| counts[c] > 0) {
            let d: f64 = centroids.row(c).iter().zip(row).map(|(a, b)| (a - b).powi(2)).sum();
            if d < best.0 {
                best = (d, c);
            }
        }
        hits += usize::from(best.1 == l);
    }
    Ok(hits as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_separation_is_chance() {
        let tr = synth_blobs(4, 2, 1000, 0.0, 1).unwrap();
        let te = synth_blobs(4, 2, 1000, 0.0, 2).unwrap();
        let acc = nearest_centroid_accuracy(&tr, &te).unwrap();
        assert!((acc - 0.5).abs() <= 0.05, "{acc}");
    }

    #[test]
    fn wide_separation_is_easy() {
        let tr = synth_blobs(4, 3, 300, 8.0, 1).unwrap();
        let te = synth_blobs(4, 3, 300, 8.0, 2).unwrap();
        assert!(nearest_centroid_accuracy(&tr, &te).unwrap() >= 0.99);
    }

    #[test]
    fn same_seed_same_data() {
        assert_eq!(synth_blobs(3, 4, 10, 2.0, 7).unwrap(), synth_blobs(3, 4, 10, 2.0, 7).unwrap());
        assert_ne!(synth_blobs(3, 4, 10, 2.0, 7).unwrap(), synth_blobs(3, 4, 10, 2.0, 8).unwrap());
    }

    #[test]
    fn means_respect_separation() {
        for (n, k) in [(5, 3), (2, 6)] {
            let mut r = rng::stream(0, "t");
            let m = class_means(n, k, 3.0, &mut r);
            let mut closest = f64::INFINITY;
            for a in 0..k {
                for b in a + 1..k {
                    let d: f64 = m.row(a).iter().zip(m.row(b)).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                    closest = closest.min(d);
                }
            }
            assert!((closest - 3.0).abs() < 1e-9, "n={n} k={k}: {closest}");
        }
    }

    #[test]
    fn counts_are_honoured() {
        let d = synth_blobs_with_counts(2, &[30, 5, 12], 1.0, 3).unwrap();
        assert_eq!(d.class_counts(), vec![30, 5, 12]);
        assert!(synth_blobs_with_counts(2, &[3, 0], 1.0, 3).is_err());
    }
}
