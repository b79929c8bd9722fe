//! Reproducible random streams for parallel Monte Carlo.
//!
//! Every replication gets its own ChaCha stream keyed by
//! `(master seed, replication index)`. Streams never depend on scheduling,
//! so serial and parallel execution produce identical draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random stream handed to simulators.
pub type Stream = ChaCha8Rng;

/// Independent stream for replication `index` under `seed`.
pub fn replication_stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stable sub-seed for a named job (FNV-1a over the label, splitmix64 mix).
///
/// Used to give each cell of a scenario grid its own seed while keeping the
/// whole grid reproducible from one master seed.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
