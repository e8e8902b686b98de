//! Seedable RNG whose full state can be captured and restored.
//!
//! Checkpoints must resume bit-identically, so every random stream used by a
//! run goes through [`RunRng`], which wraps ChaCha8 and exposes its seed,
//! stream id and word position.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunRng {
    inner: ChaCha8Rng,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSnapshot {
    pub seed: [u8; 32],
    pub stream: u64,
    /// Stored as a decimal string; JSON numbers cannot carry a u128.
    pub word_pos: String,
}

impl RunRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Independent child stream, e.g. one per evaluation round.
    pub fn derive(seed: u64, stream: u64, index: u64) -> Self {
        let mixed = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
        Self::new(mixed, stream)
    }

    pub fn snapshot(&self) -> RngSnapshot {
        RngSnapshot {
            seed: self.inner.get_seed(),
            stream: self.inner.get_stream(),
            word_pos: self.inner.get_word_pos().to_string(),
        }
    }

    pub fn restore(snap: &RngSnapshot) -> crate::Result<Self> {
        let pos: u128 = snap
            .word_pos
            .parse()
            .map_err(|_| crate::Error::Checkpoint(format!("bad rng position {:?}", snap.word_pos)))?;
        let mut inner = ChaCha8Rng::from_seed(snap.seed);
        inner.set_stream(snap.stream);
        inner.set_word_pos(pos);
        Ok(Self { inner })
    }
}

impl RngCore for RunRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
