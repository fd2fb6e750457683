//! Seedable random streams.
//!
//! Every random consumer in a run gets its own ChaCha8 stream, keyed by the
//! run seed and a stream id, so results do not depend on thread scheduling or
//! on how many draws another consumer made.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Which consumer a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    Instance,
    Environment,
    Policy,
    /// Observed-feature drift in time-varying runs.
    Drift,
}

impl StreamKind {
    fn tag(self) -> u64 {
        match self {
            StreamKind::Instance => 0,
            StreamKind::Environment => 1,
            StreamKind::Policy => 2,
            StreamKind::Drift => 3,
        }
    }
}

/// SplitMix64 finalizer; decorrelates nearby seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE5_E9B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator seeded directly from `seed`.
pub fn from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Stream for `(master_seed, seed, kind, index)`.
///
/// `index` distinguishes consumers of the same kind, e.g. algorithms.
pub fn stream(master_seed: u64, seed: u64, kind: StreamKind, index: u64) -> SimRng {
    let key = mix64(master_seed ^ mix64(seed));
    let mut rng = SimRng::seed_from_u64(key);
    rng.set_stream((kind.tag() << 32) | (index & 0xFFFF_FFFF));
    rng
}
