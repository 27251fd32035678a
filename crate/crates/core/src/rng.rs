//! Seeded random streams.
//!
//! Every episode owns several independent ChaCha streams, one per stage, all
//! derived from the episode seed. Drawing more numbers in one stage never
//! shifts the numbers another stage sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Labels for the per-episode streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    NoiseSpec,
    Observational,
    Environment,
    Fitting,
    MonteCarlo,
    Strategy,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::NoiseSpec => 1,
            Stream::Observational => 2,
            Stream::Environment => 3,
            Stream::Fitting => 4,
            Stream::MonteCarlo => 5,
            Stream::Strategy => 6,
        }
    }
}

/// Plain seeded generator, for callers that only need one stream.
pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The `stream` sub-generator of episode `seed`.
pub fn stream(seed: u64, stream: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// Sub-generator for round `index` of a stream; used where each round of an
/// episode needs fresh draws that don't depend on earlier rounds.
pub fn substream(seed: u64, stream: Stream, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(stream.id() | ((index + 1) << 8));
    rng
}
