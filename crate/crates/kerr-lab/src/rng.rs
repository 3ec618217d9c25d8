//! Reproducible sampling.
//!
//! All randomized audits draw from ChaCha12, a counter-based stream cipher
//! keyed by a u64 seed. The stream is platform-independent, so a (config,
//! seed) pair reproduces sample sets bit-exactly anywhere.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub struct LabRng(ChaCha12Rng);

impl LabRng {
    pub fn new(seed: u64) -> Self {
        LabRng(ChaCha12Rng::seed_from_u64(seed))
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.0.gen::<f64>()
    }

    /// Uniform in [-s, s).
    pub fn symmetric(&mut self, s: f64) -> f64 {
        self.uniform(-s, s)
    }

    pub fn gen_bool(&mut self) -> bool {
        self.0.gen::<bool>()
    }
}
