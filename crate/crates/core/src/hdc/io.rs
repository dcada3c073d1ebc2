//! JSON container for a trained encoder + class model pair.
//!
//! Floats are written with shortest round-trip formatting and parsed with
//! correctly rounded decimal conversion, so every `f64` survives a
//! save/load cycle bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::encoder::{Encoder, EncoderState};
use super::model::{ClassModel, ClassModelState};
use crate::error::{check_len, HdError, Result};

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "dynhd-model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Container {
    format: String,
    version: u32,
    features: usize,
    dim: usize,
    classes: usize,
    encoder: EncoderState,
    model: ClassModelState,
}

/// A trained encoder and class model that belong together.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub encoder: Encoder,
    pub model: ClassModel,
}

impl ModelBundle {
    pub fn new(encoder: Encoder, model: ClassModel) -> Result<Self> {
        check_len("bundle dimensionality", encoder.dim(), model.dim())?;
        Ok(Self { encoder, model })
    }

    pub fn to_json(&self) -> Result<String> {
        let c = Container {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            features: self.encoder.features(),
            dim: self.encoder.dim(),
            classes: self.model.num_classes(),
            encoder: EncoderState::from(&self.encoder),
            model: ClassModelState::from(&self.model),
        };
        Ok(serde_json::to_string(&c)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Container = serde_json::from_str(s)?;
        if c.format != FORMAT_NAME {
            return Err(HdError::Serialization(format!("unexpected format `{}`", c.format)));
        }
        if c.version != FORMAT_VERSION {
            return Err(HdError::Serialization(format!(
                "unsupported model format version {} (expected {FORMAT_VERSION})",
                c.version
            )));
        }
        check_len("stored feature count", c.features, c.encoder.features)?;
        check_len("stored encoder dim", c.dim, c.encoder.dim)?;
        check_len("stored model dim", c.dim, c.model.dim)?;
        check_len("stored class count", c.classes, c.model.labels.len())?;
        let encoder = Encoder::try_from(c.encoder)?;
        let model = ClassModel::try_from(c.model)?;
        Self::new(encoder, model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| HdError::invalid(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use rand::Rng;

    fn sample_bundle() -> ModelBundle {
        let mut enc = Encoder::new(3, 17, 5).unwrap();
        enc.regenerate_dims(&[4, 9]).unwrap();
        let mut r = crate::rng::stream(77, "test");
        let data: Vec<f64> = (0..3 * 17).map(|_| r.random_range(-1e3..1e3) / 7.0).collect();
        let model = ClassModel::from_classes(
            Matrix::from_vec(3, 17, data).unwrap(),
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        ModelBundle::new(enc, model).unwrap()
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let b = sample_bundle();
        let back = ModelBundle::from_json(&b.to_json().unwrap()).unwrap();
        assert_eq!(back, b);
        for (x, y) in back.model.classes().as_slice().iter().zip(b.model.classes().as_slice()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn rejects_other_versions() {
        let json = sample_bundle().to_json().unwrap().replace("\"version\":1", "\"version\":99");
        assert!(matches!(ModelBundle::from_json(&json), Err(HdError::Serialization(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.json");
        let b = sample_bundle();
        b.save(&p).unwrap();
        assert_eq!(ModelBundle::load(&p).unwrap(), b);
    }
}
