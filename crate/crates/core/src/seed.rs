//! Named sub-seed derivation.
//!
//! Every random stream in the crate is derived from one user seed plus a
//! label, so the split and each evaluation run can be reproduced on their own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SPLIT: &str = "split";
pub const EVAL_RUN: &str = "eval-run";

/// FNV-1a hash of `label/index`, used as the ChaCha stream id.
fn stream_id(label: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes().chain(*b"/").chain(index.to_le_bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn sub_rng(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(label, index));
    rng
}
