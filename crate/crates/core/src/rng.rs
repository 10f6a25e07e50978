//! Counter-based pseudorandom streams.
//!
//! Every draw is a pure function of `(key, counter)`:
//!
//! ```text
//! GOLDEN = 0x9E37_79B9_7F4A_7C15
//! mix(z):
//!     z = (z ^ (z >> 30)) * 0xBF58_476D_1CE4_E5B9
//!     z = (z ^ (z >> 27)) * 0x94D0_49BB_1331_11EB
//!     return z ^ (z >> 31)
//! u64(key, counter) = mix(key + (counter + 1) * GOLDEN)      (wrapping arithmetic)
//! ```
//!
//! This is the SplitMix64 output function evaluated at an explicit counter, so
//! a stream can be reproduced in any language from the two integers alone.
//! Derived quantities:
//!
//! * `f64`: `(u64 >> 11) * 2^-53`, uniform on `[0, 1)`.
//! * bounded integer in `[0, n)`: `(u64 * n) >> 64` in 128-bit arithmetic.
//! * standard normal: Box-Muller on two consecutive uniforms `u1, u2`,
//!   `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`; the sine branch is discarded.
//! * child key for index `i`: `mix(key + (i + 1) * GOLDEN)`, i.e. `u64(key, i)`.

pub const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Key for the `index`-th independent sub-stream of `key`.
#[inline]
pub fn derive_key(key: u64, index: u64) -> u64 {
    mix(key.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = derive_key(self.key, self.counter);
        self.counter = self.counter.wrapping_add(1);
        v
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi]`; returns `lo` exactly when the range is degenerate.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = self.next_f64();
        if hi == lo {
            lo
        } else {
            lo + u * (hi - lo)
        }
    }

    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// `k` distinct indices from `0..n`, returned in ascending order.
    ///
    /// Partial Fisher-Yates: for `i` in `0..k`, swap position `i` with
    /// `i + below(n - i)`.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot draw {k} of {n} without replacement");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }
}
