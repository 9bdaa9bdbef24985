//! Deterministic seeding.
//!
//! Every random stream in the crate is a ChaCha8 generator
//! ([`rand_chacha::ChaCha8Rng`], seeded through `seed_from_u64`). Seeds for
//! sub-streams are derived with the SplitMix64 finaliser:
//!
//! ```text
//! z = x + 0x9e3779b97f4a7c15
//! z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//! z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//! splitmix64(x) = z ^ (z >> 31)
//! mix(a, b) = splitmix64(a ^ splitmix64(b))
//! ```
//!
//! A Monte Carlo repetition `j` at grid size `n` uses
//! `mix(mix(base_seed, n), j)`, and its path/noise/jump streams use
//! `mix(rep_seed, 1|2|3)`. Normal variates come from
//! [`rand_distr::StandardNormal`] (ziggurat).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub const fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub const fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Seed of repetition `rep` at grid size `n`.
pub const fn repetition_seed(base_seed: u64, n: usize, rep: usize) -> u64 {
    mix(mix(base_seed, n as u64), rep as u64)
}

/// Independent streams of one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Path = 1,
    Noise = 2,
    Jumps = 3,
}

pub const fn stream_seed(rep_seed: u64, stream: Stream) -> u64 {
    mix(rep_seed, stream as u64)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}
