//! Seeded random streams.
//!
//! A run owns independent ChaCha substreams derived from one seed: `foe`
//! drives the explore flag and the exploration draw, `fpl` drives the
//! perturbations, and `env` is reserved for stochastic environments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FOE_STREAM: u64 = 0;
pub const FPL_STREAM: u64 = 1;
pub const ENV_STREAM: u64 = 2;

#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Stream { rng }
    }

    /// Uniform in `(0, 1]`.
    pub fn open_unit(&mut self) -> f64 {
        1.0 - self.rng.gen::<f64>()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// True with probability `p`; `p >= 1` is always true.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Unit-rate exponential variate.
    pub fn exponential(&mut self) -> f64 {
        exponential_from_uniform(self.open_unit())
    }
}

/// Inverse transform `-ln(u)` for `u` in `(0, 1]`.
pub fn exponential_from_uniform(u: f64) -> f64 {
    debug_assert!(u > 0.0 && u <= 1.0);
    let x = -u.ln();
    // -ln(1) is -0.0
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

/// The two master-algorithm streams of one run.
#[derive(Debug, Clone)]
pub struct Streams {
    pub foe: Stream,
    pub fpl: Stream,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Streams { foe: Stream::new(seed, FOE_STREAM), fpl: Stream::new(seed, FPL_STREAM) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_transform_values() {
        assert_eq!(exponential_from_uniform(1.0), 0.0);
        assert!((exponential_from_uniform((-2.0f64).exp()) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_mean_is_one() {
        let mut s = Stream::new(7, FPL_STREAM);
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.exponential()).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn streams_are_independent_and_reproducible() {
        let mut a = Streams::new(3);
        let mut b = Streams::new(3);
        let xa: Vec<f64> = (0..5).map(|_| a.foe.unit()).collect();
        let xb: Vec<f64> = (0..5).map(|_| b.foe.unit()).collect();
        assert_eq!(xa, xb);
        let ya: Vec<f64> = (0..5).map(|_| a.fpl.unit()).collect();
        assert_ne!(xa, ya);
    }

    #[test]
    fn open_unit_excludes_zero() {
        let mut s = Stream::new(1, 0);
        assert!((0..100_000).map(|_| s.open_unit()).all(|u| u > 0.0 && u <= 1.0));
    }
}
