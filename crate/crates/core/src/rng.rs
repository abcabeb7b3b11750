//! Seeded randomness shared by every stochastic step.
//!
//! All streams are ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`). Index
//! shuffles use Fisher-Yates from the last position down: for `i` in
//! `(1..n).rev()`, draw `j = (next_u64() * (i + 1)) >> 64` (128-bit product)
//! and swap positions `i` and `j`. Given the generator name, the seed and this
//! rule, a shuffle is reproducible in any language.
//!
//! Sub-streams (per epoch, per fold, per candidate) get their seed from
//! [`derive_seed`], a SplitMix64 fold over the base seed and the index path.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of indices into an independent seed.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Uniform index in `0..bound` via multiply-shift.
#[inline]
pub fn index_below(rng: &mut Rng, bound: usize) -> usize {
    ((rng.next_u64() as u128 * bound as u128) >> 64) as usize
}

pub fn shuffle<T>(rng: &mut Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = index_below(rng, i + 1);
        items.swap(i, j);
    }
}

/// Returns `0..n` in shuffled order.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    shuffle(&mut seeded(seed), &mut idx);
    idx
}
