//! Quantized class memories and random bit-flip fault injection.
//!
//! Each class vector is stored at `bits` per element, packed LSB-first with
//! element `e` of class `l` starting at bit `(l·D + e)·bits`.
//!
//! * 2, 4 and 8 bits: per-class affine grid with bin width
//!   `w = (max − min) / 2^bits`; level `q` decodes to `min + (q + ½)·w`.
//! * 1 bit: the sign only; decodes to `±mean|x|` of the class.

use std::io::Write;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HdError, Result};
use crate::hdc::ClassModel;
use crate::learner::predict_all;
use crate::matrix::Matrix;
use crate::rng::{self, NOISE_STREAM};

pub const SUPPORTED_BITS: [u8; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedModel {
    bits: u8,
    dim: usize,
    labels: Vec<String>,
    /// Per-class grid origin (`min`); unused at 1 bit.
    offset: Vec<f64>,
    /// Per-class bin width, or the decoded magnitude at 1 bit.
    scale: Vec<f64>,
    memory: Vec<u8>,
}

impl QuantizedModel {
    pub fn quantize(model: &ClassModel, bits: u8) -> Result<Self> {
        if !SUPPORTED_BITS.contains(&bits) {
            return Err(HdError::invalid(format!("unsupported precision {bits} (1, 2, 4 or 8 bits)")));
        }
        let (k, d) = (model.num_classes(), model.dim());
        let total = k * d * usize::from(bits);
        let mut qm = Self {
            bits,
            dim: d,
            labels: model.labels().to_vec(),
            offset: vec![0.0; k],
            scale: vec![0.0; k],
            memory: vec![0; total.div_ceil(8)],
        };
        let top = (1u32 << bits) - 1;
        for l in 0..k {
            let c = model.class(l);
            if bits == 1 {
                qm.scale[l] = c.iter().map(|v| v.abs()).sum::<f64>() / d as f64;
                for (e, &v) in c.iter().enumerate() {
                    qm.write_level(l, e, u32::from(v >= 0.0));
                }
                continue;
            }
            let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w = (hi - lo) / f64::from(top + 1);
            qm.offset[l] = lo;
            qm.scale[l] = w;
            for (e, &v) in c.iter().enumerate() {
                let q = if w > 0.0 { ((v - lo) / w).floor().clamp(0.0, f64::from(top)) as u32 } else { 0 };
                qm.write_level(l, e, q);
            }
        }
        Ok(qm)
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    /// k·D·bits.
    pub fn total_bits(&self) -> usize {
        self.num_classes() * self.dim * usize::from(self.bits)
    }

    pub fn memory(&self) -> &[u8] {
        &self.memory
    }

    pub fn bit(&self, pos: usize) -> bool {
        self.memory[pos / 8] >> (pos % 8) & 1 == 1
    }

    fn flip(&mut self, pos: usize) {
        self.memory[pos / 8] ^= 1 << (pos % 8);
    }

    fn write_level(&mut self, l: usize, e: usize, q: u32) {
        let start = (l * self.dim + e) * usize::from(self.bits);
        for b in 0..usize::from(self.bits) {
            let pos = start + b;
            let want = q >> b & 1 == 1;
            if self.bit(pos) != want {
                self.flip(pos);
            }
        }
    }

    fn read_level(&self, l: usize, e: usize) -> u32 {
        let start = (l * self.dim + e) * usize::from(self.bits);
        (0..usize::from(self.bits)).fold(0, |q, b| q | u32::from(self.bit(start + b)) << b)
    }

    pub fn dequantize(&self) -> Result<ClassModel> {
        let k = self.num_classes();
        let mut data = Vec::with_capacity(k * self.dim);
        for l in 0..k {
            for e in 0..self.dim {
                let q = self.read_level(l, e);
                data.push(if self.bits == 1 {
                    if q == 1 {
                        self.scale[l]
                    } else {
                        -self.scale[l]
                    }
                } else {
                    self.offset[l] + (f64::from(q) + 0.5) * self.scale[l]
                });
            }
        }
        ClassModel::from_classes(Matrix::from_vec(k, self.dim, data)?, self.labels.clone())
    }

    /// Flips exactly `round(rate·total/100)` distinct bits chosen uniformly
    /// by `seed`.
    pub fn flip_bits(&self, rate_percent: f64, seed: u64) -> Result<Self> {
        if !(0.0..=100.0).contains(&rate_percent) {
            return Err(HdError::invalid(format!("bit-flip rate must lie in [0, 100], got {rate_percent}")));
        }
        let total = self.total_bits();
        let count = flip_count(rate_percent, total);
        let mut out = self.clone();
        let mut rng = rng::stream(seed, NOISE_STREAM);
        for pos in index::sample(&mut rng, total, count) {
            out.flip(pos);
        }
        Ok(out)
    }

    /// Number of bits that differ from `other`.
    pub fn hamming(&self, other: &Self) -> usize {
        let full = self.total_bits();
        (0..full).filter(|&p| self.bit(p) != other.bit(p)).count()
    }
}

pub fn flip_count(rate_percent: f64, total_bits: usize) -> usize {
    ((rate_percent * total_bits as f64 / 100.0).round() as usize).min(total_bits)
}

/// A trained model at one dimensionality with its encoded evaluation set.
#[derive(Debug, Clone)]
pub struct SweepTarget {
    pub model: ClassModel,
    pub encoded: Matrix,
    pub labels: Vec<usize>,
}

impl SweepTarget {
    pub fn dim(&self) -> usize {
        self.model.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseGrid {
    pub dims: Vec<usize>,
    pub bits: Vec<u8>,
    pub rates: Vec<f64>,
}

impl NoiseGrid {
    pub fn len(&self) -> usize {
        self.dims.len() * self.bits.len() * self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Aggregate of the trials of one (D, bits, rate) cell. Losses are in
/// accuracy percentage points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCell {
    pub dim: usize,
    pub bits: u8,
    pub rate: f64,
    pub trials: usize,
    pub clean_accuracy: f64,
    pub mean_loss: f64,
    pub std: f64,
}

fn accuracy(model: &ClassModel, encoded: &Matrix, labels: &[usize]) -> Result<f64> {
    let pred = predict_all(model, encoded)?;
    Ok(pred.iter().zip(labels).filter(|(p, t)| p == t).count() as f64 / labels.len() as f64)
}

/// Seed of one trial; depends on the cell coordinates, not on grid order.
pub fn trial_seed(root: u64, dim: usize, bits: u8, rate: f64, trial: usize) -> u64 {
    rng::derive_seed(root, &format!("{NOISE_STREAM}/{dim}/{bits}/{rate}"), trial as u64)
}

/// Mean quality loss per cell. Clean accuracy is that of the dequantized,
/// unflipped model, so rate 0 costs exactly nothing.
pub fn noise_sweep(targets: &[SweepTarget], grid: &NoiseGrid, trials: usize, seed: u64) -> Result<Vec<NoiseCell>> {
    if grid.is_empty() || trials == 0 {
        return Err(HdError::invalid("noise sweep needs a non-empty grid and at least one trial"));
    }
    let mut cells = Vec::with_capacity(grid.len());
    for &dim in &grid.dims {
        let target = targets
            .iter()
            .find(|t| t.dim() == dim)
            .ok_or_else(|| HdError::Config(format!("no trained model for D = {dim}")))?;
        if target.labels.is_empty() {
            return Err(HdError::invalid("noise sweep needs a non-empty evaluation set"));
        }
        for &bits in &grid.bits {
            let qm = QuantizedModel::quantize(&target.model, bits)?;
            let clean = accuracy(&qm.dequantize()?, &target.encoded, &target.labels)?;
            for &rate in &grid.rates {
                let losses = (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let noisy = qm.flip_bits(rate, trial_seed(seed, dim, bits, rate, t))?;
                        let acc = accuracy(&noisy.dequantize()?, &target.encoded, &target.labels)?;
                        Ok((clean - acc) * 100.0)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let mean = losses.iter().sum::<f64>() / trials as f64;
                let var = if trials > 1 {
                    losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
                } else {
                    0.0
                };
                cells.push(NoiseCell {
                    dim,
                    bits,
                    rate,
                    trials,
                    clean_accuracy: clean,
                    mean_loss: mean,
                    std: var.sqrt(),
                });
            }
        }
    }
    Ok(cells)
}

/// CSV with columns `D,bits,rate,trials,mean_loss,std`.
pub fn write_sweep_csv<W: Write>(out: W, cells: &[NoiseCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| HdError::Io(std::io::Error::other(e));
    w.write_record(["D", "bits", "rate", "trials", "mean_loss", "std"]).map_err(io)?;
    for c in cells {
        w.write_record([
            c.dim.to_string(),
            c.bits.to_string(),
            c.rate.to_string(),
            c.trials.to_string(),
            c.mean_loss.to_string(),
            c.std.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
