//! Uniform random words and exactly uniform bounded integers.
//!
//! Every distributional guarantee of the sampler is conditional on
//! [`RngSource::next_word`] producing independent, uniform 64-bit words.

use rand::rngs::SmallRng;
use rand::{RngCore, SeedableRng};

/// Default generator (xoshiro256++).
pub type DefaultRng = SmallRng;

/// Seeded instance of [`DefaultRng`].
pub fn seeded(seed: u64) -> DefaultRng {
    SmallRng::seed_from_u64(seed)
}

pub trait RngSource {
    /// One uniform 64-bit word.
    fn next_word(&mut self) -> u64;

    /// Exactly uniform over `0..bound`. `bound` must be nonzero.
    ///
    /// Lemire's multiply-and-reject: the low half of `x * bound` is compared
    /// against `2^64 mod bound` and rejected in the biased zone.
    #[inline]
    fn uniform_below(&mut self, bound: u64) -> u64 {
        assert!(bound != 0, "uniform_below requires a nonzero bound");
        let mut m = u128::from(self.next_word()) * u128::from(bound);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                m = u128::from(self.next_word()) * u128::from(bound);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Exactly uniform over `0..2^bits` for `bits <= 64`.
    #[inline]
    fn uniform_bits(&mut self, bits: u32) -> u64 {
        match bits {
            0 => 0,
            64 => self.next_word(),
            k => self.next_word() >> (64 - k),
        }
    }
}

impl<R: RngCore + ?Sized> RngSource for R {
    #[inline]
    fn next_word(&mut self) -> u64 {
        self.next_u64()
    }
}
