//! Deterministic noise streams.
//!
//! Every source of randomness in the crate is a [`NoiseStream`] keyed by a
//! `(root seed, tag, index)` triple. Ensemble members (trajectories, Monte
//! Carlo paths) each get their own stream, so results do not depend on how
//! the members are partitioned across worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a root seed, a component tag and a member index into a sub-seed.
///
/// The mix is a fixed splitmix64 chain over the seed, the tag bytes and the
/// index, so derived seeds are stable across platforms and releases of this
/// crate's dependencies.
pub fn derive_seed(root: u64, tag: &str, index: u64) -> u64 {
    let mut state = root ^ 0x6c62_272e_07bb_0142;
    let mut out = splitmix64(&mut state);
    for chunk in tag.as_bytes().chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        state ^= u64::from_le_bytes(word);
        out ^= splitmix64(&mut state);
    }
    state ^= index;
    out ^ splitmix64(&mut state)
}

/// A self-contained random stream (ChaCha12 behind the scenes).
pub struct NoiseStream {
    rng: ChaCha12Rng,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha12Rng::seed_from_u64(seed) }
    }

    /// Stream for ensemble member `index` of component `tag` under `root`.
    pub fn derived(root: u64, tag: &str, index: u64) -> Self {
        Self::new(derive_seed(root, tag, index))
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Independent real and imaginary parts, each standard normal.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        (self.standard_normal(), self.standard_normal())
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }
}
