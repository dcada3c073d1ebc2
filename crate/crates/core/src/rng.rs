//! Deterministic, splittable random streams.
//!
//! Every source of randomness in a run derives from one root seed. A named
//! sub-stream maps the root seed and a stream name onto a ChaCha8 generator
//! whose stream id is the FNV-1a hash of the name, so two components never
//! share draws and each can be replayed on its own.
//!
//! Stream names used by the library:
//!
//! | name           | consumer                                              |
//! |----------------|-------------------------------------------------------|
//! | `encoder`      | base/phase generation, then every regeneration event  |
//! | `shuffle`      | optional per-epoch sample shuffling                   |
//! | `noise`        | bit-flip trials (one derived seed per trial)          |
//! | `synth`        | synthetic benchmark generation                        |
//! | `split`        | train/valid/test partitioning                         |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const ENCODER_STREAM: &str = "encoder";
pub const SHUFFLE_STREAM: &str = "shuffle";
pub const NOISE_STREAM: &str = "noise";
pub const SYNTH_STREAM: &str = "synth";
pub const SPLIT_STREAM: &str = "split";

fn fnv1a(name: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in name.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// Opens the named sub-stream of `root`.
pub fn stream(root: u64, name: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(fnv1a(name));
    rng
}

/// Derives an independent 64-bit seed for item `index` of a named family,
/// e.g. the `i`-th noise trial of a sweep cell.
pub fn derive_seed(root: u64, name: &str, index: u64) -> u64 {
    use rand::RngCore;
    let mut rng = stream(root, name);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// Position of a generator inside its stream. Enough to resume a stream
/// exactly after deserialization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedLineage {
    pub root_seed: u64,
    pub stream: String,
    /// ChaCha word position, stored as a decimal string (exceeds 2^64).
    #[serde(with = "u128_string")]
    pub word_pos: u128,
    /// Number of regeneration events consumed so far.
    pub regenerations: u64,
}

mod u128_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
