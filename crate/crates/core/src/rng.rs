//! Seeded random sources shared by the Monte Carlo and the simulator.
//!
//! Everything runs on ChaCha8, which produces the same stream on every
//! platform. Gaussian draws use the Box–Muller transform on top of raw
//! uniforms so results never depend on a distribution crate's sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for `seed`, positioned on an independent sub-stream.
pub fn stream(seed: u64, stream_id: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Uniform draw on the open interval (0, 1].
#[inline]
fn uniform_open_low<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 53 random mantissa bits, shifted off zero so ln() stays finite.
    ((rng.next_u64() >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

/// Two independent standard normal variates.
#[inline]
pub fn normal_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1 = uniform_open_low(rng);
    let u2 = uniform_open_low(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

/// A single standard normal variate (the second Box–Muller output is discarded).
pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    normal_pair(rng).0
}

/// Uniform on [0, 1).
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
