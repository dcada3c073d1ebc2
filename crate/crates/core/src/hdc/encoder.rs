//! Nonlinear random-projection encoder with per-dimension regeneration.
//!
//! Dimension `i` of an encoded sample is
//! `cos(B_i · f + c_i) * sin(B_i · f)`, where the base row `B_i` is drawn
//! i.i.d. standard normal and the phase `c_i` uniform on `[0, 2π)`.
//!
//! Draw order on the `encoder` stream: for each dimension in ascending
//! order, the `n` base entries of its row followed by its phase. Creation
//! draws every dimension; a regeneration event draws only the selected
//! dimensions, in ascending index order, continuing the same stream.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hypervector::{dot, Hypervector};
use crate::error::{check_len, HdError, Result};
use crate::matrix::Matrix;
use crate::rng::{self, SeedLineage, ENCODER_STREAM};

#[derive(Debug, Clone)]
pub struct Encoder {
    /// D rows of length n; row-major so a regenerated dimension is one
    /// contiguous slice.
    base: Matrix,
    phase: Vec<f64>,
    rng: ChaCha8Rng,
    root_seed: u64,
    regenerations: u64,
}

impl Encoder {
    pub fn new(features: usize, dim: usize, seed: u64) -> Result<Self> {
        if features == 0 {
            return Err(HdError::invalid("encoder feature count must be at least 1"));
        }
        if dim == 0 {
            return Err(HdError::invalid("encoder dimensionality must be at least 1"));
        }
        let mut enc = Self {
            base: Matrix::zeros(dim, features),
            phase: vec![0.0; dim],
            rng: rng::stream(seed, ENCODER_STREAM),
            root_seed: seed,
            regenerations: 0,
        };
        for i in 0..dim {
            enc.draw_dimension(i);
        }
        Ok(enc)
    }

    /// Rebuilds an encoder from stored parts, resuming the RNG at the
    /// recorded position.
    pub fn from_parts(base: Matrix, phase: Vec<f64>, lineage: &SeedLineage) -> Result<Self> {
        check_len("encoder phase", base.rows(), phase.len())?;
        if base.rows() == 0 || base.cols() == 0 {
            return Err(HdError::invalid("encoder must have at least one row and column"));
        }
        if !base.all_finite() || phase.iter().any(|c| !(0.0..TAU).contains(c)) {
            return Err(HdError::invalid("encoder parameters out of range"));
        }
        if lineage.stream != ENCODER_STREAM {
            return Err(HdError::invalid(format!(
                "encoder lineage names stream `{}`",
                lineage.stream
            )));
        }
        let mut rng = rng::stream(lineage.root_seed, ENCODER_STREAM);
        rng.set_word_pos(lineage.word_pos);
        Ok(Self {
            base,
            phase,
            rng,
            root_seed: lineage.root_seed,
            regenerations: lineage.regenerations,
        })
    }

    fn draw_dimension(&mut self, i: usize) {
        let rng = &mut self.rng;
        for b in self.base.row_mut(i) {
            *b = rng.sample(StandardNormal);
        }
        self.phase[i] = rng.random_range(0.0..TAU);
    }

    /// Input feature count `n`.
    pub fn features(&self) -> usize {
        self.base.cols()
    }

    /// Output dimensionality `D`.
    pub fn dim(&self) -> usize {
        self.base.rows()
    }

    pub fn base(&self) -> &Matrix {
        &self.base
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    pub fn lineage(&self) -> SeedLineage {
        SeedLineage {
            root_seed: self.root_seed,
            stream: ENCODER_STREAM.to_string(),
            word_pos: self.rng.get_word_pos(),
            regenerations: self.regenerations,
        }
    }

    #[inline]
    fn encode_dim(&self, i: usize, f: &[f64]) -> f64 {
        let x = dot(self.base.row(i), f);
        (x + self.phase[i]).cos() * x.sin()
    }

    fn encode_into(&self, f: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.encode_dim(i, f);
        }
    }

    pub fn encode(&self, f: &[f64]) -> Result<Hypervector> {
        check_len("encode", self.features(), f.len())?;
        let mut out = vec![0.0; self.dim()];
        self.encode_into(f, &mut out);
        Ok(Hypervector::new(out))
    }

    /// Encodes every row of `batch`. Rows are processed in parallel; each
    /// output row equals [`Encoder::encode`] of the input row exactly.
    pub fn encode_batch(&self, batch: &Matrix) -> Result<Matrix> {
        if batch.rows() > 0 {
            check_len("encode_batch", self.features(), batch.cols())?;
        }
        let mut out = Matrix::zeros(batch.rows(), self.dim());
        if batch.rows() == 0 {
            return Ok(out);
        }
        let dim = self.dim();
        out.as_mut_slice()
            .par_chunks_mut(dim)
            .enumerate()
            .for_each(|(j, row)| self.encode_into(batch.row(j), row));
        Ok(out)
    }

    /// Recomputes only the listed columns of an already encoded batch.
    pub fn reencode_dims(&self, batch: &Matrix, encoded: &mut Matrix, dims: &[usize]) -> Result<()> {
        check_len("reencode rows", batch.rows(), encoded.rows())?;
        if batch.rows() == 0 || dims.is_empty() {
            return Ok(());
        }
        check_len("reencode features", self.features(), batch.cols())?;
        check_len("reencode dim", self.dim(), encoded.cols())?;
        self.check_dims(dims)?;
        let dim = self.dim();
        encoded
            .as_mut_slice()
            .par_chunks_mut(dim)
            .enumerate()
            .for_each(|(j, row)| {
                let f = batch.row(j);
                for &i in dims {
                    row[i] = self.encode_dim(i, f);
                }
            });
        Ok(())
    }

    fn check_dims(&self, dims: &[usize]) -> Result<()> {
        match dims.iter().find(|&&i| i >= self.dim()) {
            Some(i) => Err(HdError::invalid(format!(
                "dimension index {i} out of range for D = {}",
                self.dim()
            ))),
            None => Ok(()),
        }
    }

    /// Redraws the base row and phase of each listed dimension. Duplicates
    /// are ignored and indices are processed in ascending order.
    pub fn regenerate_dims(&mut self, dims: &[usize]) -> Result<()> {
        self.check_dims(dims)?;
        if dims.is_empty() {
            return Ok(());
        }
        let mut sorted = dims.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for i in sorted {
            self.draw_dimension(i);
        }
        self.regenerations += 1;
        Ok(())
    }
}

impl PartialEq for Encoder {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.phase == other.phase && self.lineage() == other.lineage()
    }
}

/// Serializable snapshot of an encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderState {
    pub features: usize,
    pub dim: usize,
    /// Row-major D×n base matrix.
    pub base: Vec<f64>,
    pub phase: Vec<f64>,
    pub lineage: SeedLineage,
}

impl From<&Encoder> for EncoderState {
    fn from(enc: &Encoder) -> Self {
        Self {
            features: enc.features(),
            dim: enc.dim(),
            base: enc.base.as_slice().to_vec(),
            phase: enc.phase.clone(),
            lineage: enc.lineage(),
        }
    }
}

impl TryFrom<EncoderState> for Encoder {
    type Error = HdError;

    fn try_from(s: EncoderState) -> Result<Self> {
        let base = Matrix::from_vec(s.dim, s.features, s.base)?;
        Encoder::from_parts(base, s.phase, &s.lineage)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn manual(base: Vec<f64>, n: usize, phase: Vec<f64>) -> Encoder {
        let d = phase.len();
        let lineage = SeedLineage {
            root_seed: 0,
            stream: ENCODER_STREAM.to_string(),
            word_pos: 0,
            regenerations: 0,
        };
        Encoder::from_parts(Matrix::from_vec(d, n, base).unwrap(), phase, &lineage).unwrap()
    }

    #[test]
    fn base_entries_are_standard_normal() {
        let enc = Encoder::new(4, 1000, 7).unwrap();
        let vals = enc.base().as_slice();
        assert_eq!(vals.len(), 4000);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!(var > 0.9 && var < 1.1, "variance {var}");
        assert!(enc.phase().iter().all(|c| (0.0..TAU).contains(c)));
    }

    #[test]
    fn creation_is_deterministic() {
        let a = Encoder::new(1, 1, 42).unwrap();
        let b = Encoder::new(1, 1, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.base(), Encoder::new(1, 1, 43).unwrap().base());
    }

    #[test]
    fn zero_sizes_are_rejected() {
        assert!(matches!(Encoder::new(0, 10, 0), Err(HdError::InvalidArgument(_))));
        assert!(matches!(Encoder::new(3, 0, 0), Err(HdError::InvalidArgument(_))));
    }

    #[test]
    fn zero_input_encodes_to_zero() {
        let enc = Encoder::new(5, 64, 1).unwrap();
        let h = enc.encode(&[0.0; 5]).unwrap();
        assert!(h.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn analytic_single_dimension_cases() {
        // cos(π/2) · sin(π/2) = 0
        let enc = manual(vec![1.0], 1, vec![0.0]);
        let h = enc.encode(&[FRAC_PI_2]).unwrap();
        assert!(h.as_slice()[0].abs() < 1e-15);

        // B = [1, 1], c = π/2, f = [π/4, π/4]: cos(π) · sin(π/2) = -1
        let enc = manual(vec![1.0, 1.0], 2, vec![FRAC_PI_2]);
        let h = enc.encode(&[FRAC_PI_4, FRAC_PI_4]).unwrap();
        let x: f64 = FRAC_PI_4 + FRAC_PI_4;
        let expected = (x + FRAC_PI_2).cos() * x.sin();
        assert!((h.as_slice()[0] - expected).abs() < 1e-15);
        assert!((h.as_slice()[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_feature_count() {
        let enc = Encoder::new(3, 8, 0).unwrap();
        assert!(matches!(enc.encode(&[1.0, 2.0]), Err(HdError::Dimension { .. })));
        let bad = Matrix::zeros(2, 4);
        assert!(enc.encode_batch(&bad).is_err());
    }

    #[test]
    fn batch_matches_single_sample_path() {
        let enc = Encoder::new(6, 33, 11).unwrap();
        let mut r = rng::stream(2, "test");
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..6).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let batch = Matrix::from_rows(&rows).unwrap();
        let out = enc.encode_batch(&batch).unwrap();
        for (j, row) in rows.iter().enumerate() {
            assert_eq!(out.row(j), enc.encode(row).unwrap().as_slice());
        }
    }

    #[test]
    fn batch_of_identical_rows() {
        let enc = Encoder::new(2, 16, 3).unwrap();
        let batch = Matrix::from_rows(&[[0.5, -1.0], [0.5, -1.0], [0.5, -1.0]]).unwrap();
        let out = enc.encode_batch(&batch).unwrap();
        assert_eq!(out.row(0), out.row(1));
        assert_eq!(out.row(1), out.row(2));
        let zero = enc.encode_batch(&Matrix::zeros(1, 2)).unwrap();
        assert!(zero.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn regeneration_is_isolated() {
        let mut enc = Encoder::new(3, 4, 5).unwrap();
        let before = enc.clone();
        enc.regenerate_dims(&[]).unwrap();
        assert_eq!(enc, before);

        enc.regenerate_dims(&[0]).unwrap();
        assert_ne!(enc.base().row(0), before.base().row(0));
        for i in 1..4 {
            assert_eq!(enc.base().row(i), before.base().row(i));
            assert_eq!(enc.phase()[i].to_bits(), before.phase()[i].to_bits());
        }
    }

    #[test]
    fn regeneration_out_of_range() {
        let mut enc = Encoder::new(3, 4, 5).unwrap();
        let before = enc.clone();
        assert!(matches!(enc.regenerate_dims(&[1, 4]), Err(HdError::InvalidArgument(_))));
        assert_eq!(enc, before);
    }

    #[test]
    fn regeneration_is_reproducible() {
        let all: Vec<usize> = (0..16).collect();
        let run = || {
            let mut e = Encoder::new(4, 16, 99).unwrap();
            e.regenerate_dims(&all).unwrap();
            e.regenerate_dims(&all).unwrap();
            e
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn reencode_matches_full_encode() {
        let mut enc = Encoder::new(3, 10, 8).unwrap();
        let batch = Matrix::from_rows(&[[0.1, 0.2, 0.3], [-1.0, 0.5, 2.0]]).unwrap();
        let mut encoded = enc.encode_batch(&batch).unwrap();
        enc.regenerate_dims(&[2, 7]).unwrap();
        enc.reencode_dims(&batch, &mut encoded, &[2, 7]).unwrap();
        assert_eq!(encoded, enc.encode_batch(&batch).unwrap());
    }

    #[test]
    fn state_round_trip_resumes_stream() {
        let mut enc = Encoder::new(3, 8, 21).unwrap();
        enc.regenerate_dims(&[1, 5]).unwrap();
        let json = serde_json::to_string(&EncoderState::from(&enc)).unwrap();
        let state: EncoderState = serde_json::from_str(&json).unwrap();
        let mut restored = Encoder::try_from(state).unwrap();
        assert_eq!(restored, enc);
        enc.regenerate_dims(&[0, 3]).unwrap();
        restored.regenerate_dims(&[0, 3]).unwrap();
        assert_eq!(restored, enc);
    }
}
