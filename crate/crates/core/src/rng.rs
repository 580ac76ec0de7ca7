//! Reproducible per-path random streams.
//!
//! Each path `j` of an experiment with seed `s` draws from ChaCha8 keyed by
//! `s` on stream `j`, so any path can be regenerated from `(s, j)` alone and
//! streams never overlap. Normal variates use the Box-Muller transform:
//!
//! ```text
//! u1 = (top 53 bits + 1) / 2^53   in (0, 1]
//! u2 =  top 53 bits      / 2^53   in [0, 1)
//! z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2)
//! ```
//!
//! with `z0` returned first and `z1` on the following call.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct PathRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

impl PathRng {
    /// Stream `stream` of the generator keyed by `seed`.
    pub fn split(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * INV_2_53
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * INV_2_53;
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Fills `out` with independent `N(0, std^2)` draws.
    pub fn fill_normal<T: Scalar>(&mut self, std: T, out: &mut [T]) {
        for o in out.iter_mut() {
            *o = std * T::lit(self.standard_normal());
        }
    }

    pub fn normal_vec<T: Scalar>(&mut self, std: T, n: usize) -> Vec<T> {
        let mut v = vec![T::zero(); n];
        self.fill_normal(std, &mut v);
        v
    }
}
