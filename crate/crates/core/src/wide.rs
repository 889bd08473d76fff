//! Fixed-width 2240-bit unsigned integers.
//!
//! Exact level weights scaled to the lowest occupied level need fewer than
//! `128 + 2098` bits, so 35 words cover every quantity the bulk sampler
//! builds. Overflow and underflow are program errors and panic.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Shl, Sub, SubAssign};

use crate::rng::RngSource;

pub const WIDE_WORDS: usize = 35;
pub const WIDE_BITS: u32 = WIDE_WORDS as u32 * 64;

/// Little-endian 35-word unsigned integer.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct WideInt([u64; WIDE_WORDS]);

impl WideInt {
    pub const ZERO: Self = Self([0; WIDE_WORDS]);

    pub fn from_u128(v: u128) -> Self {
        let mut w = [0; WIDE_WORDS];
        w[0] = v as u64;
        w[1] = (v >> 64) as u64;
        Self(w)
    }

    pub fn from_u64(v: u64) -> Self {
        Self::from_u128(u128::from(v))
    }

    pub fn words(&self) -> &[u64; WIDE_WORDS] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    /// Number of significant bits; zero for zero.
    pub fn bits(&self) -> u32 {
        self.0
            .iter()
            .rposition(|&w| w != 0)
            .map_or(0, |i| i as u32 * 64 + 64 - self.0[i].leading_zeros())
    }

    /// Value if it fits in 128 bits.
    pub fn to_u128(&self) -> Option<u128> {
        self.0[2..]
            .iter()
            .all(|&w| w == 0)
            .then(|| u128::from(self.0[0]) | u128::from(self.0[1]) << 64)
    }

    pub fn checked_add(&self, rhs: &Self) -> Option<Self> {
        let mut out = [0; WIDE_WORDS];
        let mut carry = false;
        for (i, o) in out.iter_mut().enumerate() {
            let (s1, c1) = self.0[i].overflowing_add(rhs.0[i]);
            let (s2, c2) = s1.overflowing_add(u64::from(carry));
            *o = s2;
            carry = c1 || c2;
        }
        (!carry).then_some(Self(out))
    }

    pub fn checked_sub(&self, rhs: &Self) -> Option<Self> {
        let mut out = [0; WIDE_WORDS];
        let mut borrow = false;
        for (i, o) in out.iter_mut().enumerate() {
            let (d1, b1) = self.0[i].overflowing_sub(rhs.0[i]);
            let (d2, b2) = d1.overflowing_sub(u64::from(borrow));
            *o = d2;
            borrow = b1 || b2;
        }
        (!borrow).then_some(Self(out))
    }

    /// `self << k`, or `None` if a set bit would be shifted out.
    pub fn checked_shl(&self, k: u32) -> Option<Self> {
        if self.is_zero() {
            return Some(Self::ZERO);
        }
        if self.bits() + k > WIDE_BITS {
            return None;
        }
        let (word_shift, bit_shift) = ((k / 64) as usize, k % 64);
        let mut out = [0; WIDE_WORDS];
        for i in (word_shift..WIDE_WORDS).rev() {
            let src = i - word_shift;
            let mut v = self.0[src] << bit_shift;
            if bit_shift != 0 && src > 0 {
                v |= self.0[src - 1] >> (64 - bit_shift);
            }
            out[i] = v;
        }
        Some(Self(out))
    }

    /// Exactly uniform over `0..bound` by rejection on the bit length of
    /// `bound`. Each attempt succeeds with probability above 1/2.
    pub fn uniform_below<R: RngSource + ?Sized>(rng: &mut R, bound: &Self) -> Self {
        let bits = bound.bits();
        assert!(bits > 0, "uniform_below requires a nonzero bound");
        let words = bits.div_ceil(64) as usize;
        let top_bits = bits - (words as u32 - 1) * 64;
        loop {
            let mut out = [0; WIDE_WORDS];
            // Most significant word first so most rejections are decided
            // before the low words are drawn.
            out[words - 1] = rng.uniform_bits(top_bits);
            let mut ord = out[words - 1].cmp(&bound.0[words - 1]);
            for i in (0..words - 1).rev() {
                out[i] = rng.next_word();
                if ord == Ordering::Equal {
                    ord = out[i].cmp(&bound.0[i]);
                }
                if ord == Ordering::Greater {
                    break;
                }
            }
            // Only a `Greater` comparison stops early, so an accepted value
            // always has every word drawn.
            if ord == Ordering::Less {
                return Self(out);
            }
        }
    }
}

impl Ord for WideInt {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.iter().rev().cmp(other.0.iter().rev())
    }
}

impl PartialOrd for WideInt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for WideInt {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.checked_add(&rhs).expect("WideInt addition overflow")
    }
}

impl AddAssign for WideInt {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for WideInt {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.checked_sub(&rhs)
            .expect("WideInt subtraction underflow")
    }
}

impl SubAssign for WideInt {
    fn sub_assign(&mut self, rhs: Self) {
        *self = *self - rhs;
    }
}

impl Shl<u32> for WideInt {
    type Output = Self;
    fn shl(self, k: u32) -> Self {
        self.checked_shl(k).expect("WideInt shift overflow")
    }
}

impl fmt::Debug for WideInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let top = self.0.iter().rposition(|&w| w != 0).unwrap_or(0);
        write!(f, "WideInt(0x")?;
        for (n, i) in (0..=top).rev().enumerate() {
            if n == 0 {
                write!(f, "{:x}", self.0[i])?;
            } else {
                write!(f, "_{:016x}", self.0[i])?;
            }
        }
        write!(f, ")")
    }
}
