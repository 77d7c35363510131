//! Random-number helpers shared by the simulators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for one step of a replayable simulation: the stream is keyed by
/// `(seed, step)` so any step can be regenerated without replaying the run.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng
}

/// Sequential generator for long Monte-Carlo runs.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}

/// Exponential draw with the given rate by inversion of the CDF.
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -libm::log1p(-uniform(rng)) / rate
}
