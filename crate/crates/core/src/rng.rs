//! Reproducible random streams for the Monte Carlo checks.
//!
//! The generator is xoshiro256++ seeded through SplitMix64 (the reference
//! seeding procedure of its authors), so every stream is fully determined by a
//! 64-bit seed and can be reproduced bit-for-bit by any other implementation:
//!
//! * uniform `[0, 1)`: `(next_u64() >> 11) * 2^-53`
//! * uniform `(0, 1]`: `((next_u64() >> 11) + 1) * 2^-53`
//! * standard normal: Box–Muller on a pair `u1 ∈ (0,1]`, `u2 ∈ [0,1)`,
//!   returning `√(-2 ln u1) cos(2π u2)` first and `√(-2 ln u1) sin(2π u2)` on
//!   the next call.
//!
//! Substreams for parallel shards are derived with the xoshiro `jump`
//! function (2^128 steps apart), indexed by block number.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct Stream {
    inner: Xoshiro256PlusPlus,
    spare_normal: Option<f64>,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Stream for block `index` of a computation seeded with `seed`.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut inner = Xoshiro256PlusPlus::seed_from_u64(seed);
        for _ in 0..index {
            inner.jump();
        }
        Self {
            inner,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open_low(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * TWO_POW_NEG_53
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open_low();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }
}
