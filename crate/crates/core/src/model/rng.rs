//! Named, index-derived random streams.
//!
//! A root seed fans out to independent ChaCha streams keyed by a component
//! name and an index, so results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const SAA: &str = "saa";
pub const ESTIMATE: &str = "estimate";
pub const ORACLE: &str = "oracle";

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn stream(root: u64, name: &str, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    let id = fnv1a(name.bytes().chain(index.to_le_bytes()));
    rng.set_stream(id);
    rng
}
