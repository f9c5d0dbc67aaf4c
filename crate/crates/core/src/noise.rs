//! Counter-addressed standard Gaussian noise.
//!
//! Every draw is a pure function of `(seed, trial, time, coord)`. The seed keys a
//! ChaCha8 generator, the trial selects its stream, and `(time, coord)` fixes the
//! word position, so any single entry can be regenerated without replaying the
//! rest of the trajectory.

use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS_PER_DRAW: u128 = 4;

fn generator(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn word_pos(time: usize, coord: usize) -> u128 {
    (((time as u128) << 32) | coord as u128) * WORDS_PER_DRAW
}

fn box_muller(a: u64, b: u64) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((a >> 11) as f64 + 1.0) * SCALE;
    let u2 = (b >> 11) as f64 * SCALE;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// The noise value at `(time, coord)` of the given trial.
pub fn noise_entry(seed: u64, trial: u64, time: usize, coord: usize) -> f64 {
    let mut rng = generator(seed, trial);
    rng.set_word_pos(word_pos(time, coord));
    box_muller(rng.next_u64(), rng.next_u64())
}

/// An `n x len` noise matrix whose column `t` holds `w_t`.
pub fn noise_matrix(seed: u64, trial: u64, n: usize, len: usize) -> DMatrix<f64> {
    let mut rng = generator(seed, trial);
    let mut e = DMatrix::zeros(n, len);
    for t in 0..len {
        rng.set_word_pos(word_pos(t, 0));
        for j in 0..n {
            e[(j, t)] = box_muller(rng.next_u64(), rng.next_u64());
        }
    }
    e
}

/// Derives an independent 64-bit seed from a base seed and an index.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut rng = generator(base, u64::MAX);
    rng.set_word_pos(index as u128 * 2);
    rng.next_u64()
}
