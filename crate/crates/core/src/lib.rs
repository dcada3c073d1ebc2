//! Hyperdimensional classification with learner-aware dimension
//! regeneration.
//!
//! Samples are lifted into a D-dimensional space by a nonlinear random
//! projection ([`hdc::Encoder`]) and classified by cosine similarity against
//! per-class prototypes ([`hdc::ClassModel`]). Training ([`learner::train`])
//! alternates similarity-weighted adaptive updates with a regeneration step
//! ([`regen`]) that replaces encoder dimensions which pull misclassified
//! samples toward the wrong classes.
//!
//! ```
//! use dynhd::data::synth_blobs;
//! use dynhd::learner::{train, TrainConfig};
//!
//! let ds = synth_blobs(4, 3, 50, 6.0, 1).unwrap();
//! let cfg = TrainConfig { dim: 128, max_iters: 5, ..TrainConfig::default() };
//! let trained = train(&cfg, &ds, None).unwrap();
//! assert_eq!(trained.model.num_classes(), 3);
//! ```

pub mod data;
pub mod error;
pub mod hdc;
pub mod learner;
pub mod matrix;
pub mod metrics;
pub mod regen;
pub mod robustness;
pub mod rng;

pub use error::{HdError, Result};
pub use matrix::Matrix;
