use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha, a counter-based generator: the key is derived from
/// `seed`, the 64-bit nonce is `stream_id`, and the block counter is the
/// stream position. Distinct stream ids therefore never overlap, and any
/// draw is a pure function of `(seed, stream_id, position)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// Draws one `N(mean, sd²)` variate from `stream`.
pub fn rng_normal(stream: &mut RngStream, mean: f64, sd: f64) -> Result<f64> {
    if !(sd >= 0.0) {
        return Err(Error::domain(format!("standard deviation {sd} must be non-negative")));
    }
    if sd == 0.0 {
        return Ok(mean);
    }
    Ok(mean + sd * stream.standard_normal())
}

/// SplitMix64 finalizer over `seed` and a list of keys; used to derive
/// per-replication seeds so that nested indices map to unrelated keys.
pub fn mix_seed(seed: u64, keys: &[u64]) -> u64 {
    let mut state = seed;
    for &k in keys {
        state = splitmix(state ^ splitmix(k.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    splitmix(state)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
