//! Named random sub-streams derived from a single run seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init,
    Folds,
    Episodes,
    RandomScores,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Init => 0x494e_4954,
            Stream::Folds => 0x464f_4c44,
            Stream::Episodes => 0x4550_4953,
            Stream::RandomScores => 0x5241_4e44,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for `stream` at the given coordinates (epoch, video, episode, ...).
pub fn derive_seed(seed: u64, stream: Stream, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(seed ^ splitmix64(stream.tag())), |acc, &c| {
            splitmix64(acc ^ splitmix64(c))
        })
}

pub fn stream_rng(seed: u64, stream: Stream, coords: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, coords))
}
