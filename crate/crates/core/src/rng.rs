//! Counter-based random streams.
//!
//! Every stochastic draw in the crate comes from a stream addressed by the
//! master seed, a domain tag and up to three counters (for example node id
//! and walk index). Work can therefore be split across threads in any way
//! without changing the numbers that come out.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream domains. Keeping them distinct guarantees that two subsystems
/// never share a stream even when their counters coincide.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Init = 1,
    Walk = 2,
    Shuffle = 3,
    Negatives = 4,
    TrainFlows = 5,
    EvalFlows = 6,
    Split = 7,
    Report = 8,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for `(seed, domain, a, b, c)`.
pub fn stream(seed: u64, domain: Domain, a: u64, b: u64, c: u64) -> StreamRng {
    let mut key = [0u8; 32];
    let mut h = splitmix64(seed ^ splitmix64(domain as u64));
    for (chunk, word) in key.chunks_exact_mut(8).zip([a, b, c, 0]) {
        h = splitmix64(h ^ splitmix64(word.wrapping_add(0xA076_1D64_78BD_642F)));
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, Domain::Walk, 1, 2, 3), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, Domain::Walk, 1, 2, 3), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, Domain::Walk, 2, 1, 3), |r, _| Some(r.random())).collect();
        let d: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, Domain::Shuffle, 1, 2, 3), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}
