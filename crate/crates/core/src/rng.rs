//! Seeded random streams. Every Monte Carlo consumer draws from its own
//! `(seed, stream)` pair so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id built from a tag and two counters, so call sites cannot collide.
pub fn stream_id(tag: u16, a: u32, b: u32) -> u64 {
    ((tag as u64) << 48) ^ ((a as u64) << 24) ^ (b as u64)
}
