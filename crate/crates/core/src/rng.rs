//! Counter-based SplitMix64 streams.
//!
//! Draw `n` (counting from 0) of the stream with key `k` is
//! `mix(k + (n + 1) * 0x9E3779B97F4A7C15)` with wrapping arithmetic, where `mix` is
//! the SplitMix64 finalizer
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! The key of stream `s` under seed `seed` is `mix(seed ^ mix(s + 0x632BE59BD9B4E019))`.
//! Uniform doubles take the top 53 bits: `(x >> 11) * 2^-53`.
//! Because every draw is a pure function of `(seed, stream, counter)`, trials can be
//! scheduled on any number of threads and still reproduce bit for bit.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0x632B_E59B_D9B4_E019;

#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitMix {
    key: u64,
    counter: u64,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self { key: seed, counter: 0 }
    }

    /// Independent stream `stream` derived from `seed`.
    pub fn stream(seed: u64, stream: u64) -> Self {
        Self {
            key: mix(seed ^ mix(stream.wrapping_add(STREAM_SALT))),
            counter: 0,
        }
    }

    /// Jump directly to draw number `counter`.
    pub fn at(&self, counter: u64) -> u64 {
        mix(self.key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[-1, 1]`.
    pub fn next_signed(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    /// Uniform integer in `0..n` by Lemire's multiply-shift with rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }
}
