//! Seeded, stream-separated random sampling.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Deterministic generator keyed by `(seed, stream)`.
///
/// Equal keys replay bit-identical sequences; distinct streams of one seed are
/// independent ChaCha streams.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh generator on another stream of the same seed.
    pub fn fork(&self, stream: u64) -> Self {
        Self::new(self.seed, stream)
    }

    /// A generator on a stream derived from this one's stream, a purpose tag and an index.
    pub fn substream(&self, tag: u64, index: u64) -> Self {
        let mixed = splitmix64(splitmix64(self.stream ^ splitmix64(tag)) ^ index);
        Self::new(self.seed, mixed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound`.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0);
        // Lemire's multiply-shift with rejection.
        let bound = bound as u64;
        loop {
            let x = self.inner.next_u64();
            let m = (x as u128) * (bound as u128);
            let low = m as u64;
            if low >= bound.wrapping_neg() % bound {
                return (m >> 64) as usize;
            }
        }
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sample_uniform(rng: &mut SeededRng, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(hi > lo) {
        return Err(Error::InvalidParameter(format!("uniform bounds need hi > lo, got [{lo}, {hi}]")));
    }
    let width = hi - lo;
    Ok((0..n).map(|_| lo + width * rng.next_f64()).collect())
}

/// Box-Muller normal samples; both values of each pair are consumed in order.
pub fn sample_normal(rng: &mut SeededRng, mean: f64, std: f64, n: usize) -> Result<Vec<f64>> {
    if !(std >= 0.0) {
        return Err(Error::InvalidParameter(format!("normal std must be >= 0, got {std}")));
    }
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        // 1 - U lies in (0, 1], keeping the log finite.
        let u1 = 1.0 - rng.next_f64();
        let u2 = rng.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        out.push(mean + std * r * theta.cos());
        out.push(mean + std * r * theta.sin());
    }
    out.truncate(n);
    Ok(out)
}

/// Arcsine law on (-1, 1), drawn as `sin(U(-pi, pi))`.
pub fn sample_arcsine(rng: &mut SeededRng, n: usize) -> Result<Vec<f64>> {
    Ok((0..n).map(|_| (PI * (2.0 * rng.next_f64() - 1.0)).sin()).collect())
}
