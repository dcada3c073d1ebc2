//! Hypervector primitives, the nonlinear encoder and the class model.

mod encoder;
mod hypervector;
mod io;
mod model;

pub use encoder::{Encoder, EncoderState};
pub use hypervector::{bind, bundle, cosine_similarity, dot, norm, Hypervector};
pub use io::{write_atomic, ModelBundle, FORMAT_VERSION};
pub use model::{ClassModel, ClassModelState};
