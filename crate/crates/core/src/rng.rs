//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream derived from a
//! master seed and a stream label, so adding draws in one stage never shifts
//! another. These generators are reproducible, not cryptographically secure;
//! a deployment that makes a real privacy claim has to swap in an OS-backed
//! source for the randomized-response draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DppmRng = ChaCha8Rng;

/// Named stream identifiers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    ModelInit,
    Embedding,
    Batches,
    Projections,
    Mechanism,
    Sampler,
    Classifier,
    Data,
    Audit,
    Jitter,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::ModelInit => 1,
            Stream::Embedding => 2,
            Stream::Batches => 3,
            Stream::Projections => 4,
            Stream::Mechanism => 5,
            Stream::Sampler => 6,
            Stream::Classifier => 7,
            Stream::Data => 8,
            Stream::Audit => 9,
            Stream::Jitter => 10,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> DppmRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}

/// Independent sub-stream `index` of `which`, e.g. one per sampling chain.
pub fn substream(seed: u64, which: Stream, index: u64) -> DppmRng {
    let mixed = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03))
        ^ which.id().rotate_left(17);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    rng.set_stream(which.id() << 32 | (index & 0xFFFF_FFFF));
    rng
}
