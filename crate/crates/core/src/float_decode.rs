//! Conversion between binary64 weights and the `(level, significand)` form.
//!
//! A positive finite double `w` is written as `w = sig * 2^level` with the
//! significand normalized so that its top bit is set, `sig ∈ [2^63, 2^64)`.
//! Subnormals are normalized the same way, which adds 52 levels below the
//! normal range. The full level domain is `[LEVEL_MIN, LEVEL_MAX]`, 2098
//! values in total.

use std::fmt::Debug;

use num_traits::Float;

use crate::error::EbusError;

/// Smallest level: the smallest subnormal `2^-1074` decodes to `2^63 * 2^-1137`.
pub const LEVEL_MIN: i32 = -1137;
/// Largest level: `f64::MAX` has unbiased exponent 1023, so `1023 - 63`.
pub const LEVEL_MAX: i32 = 960;
/// Number of distinct levels.
pub const NUM_LEVELS: usize = (LEVEL_MAX - LEVEL_MIN + 1) as usize;

const FRAC_BITS: u32 = 52;
const FRAC_MASK: u64 = (1 << FRAC_BITS) - 1;
const EXP_BIAS: i32 = 1023;
/// Level of the smallest normal double (`2^-1022`).
const LEVEL_MIN_NORMAL: i32 = -1022 - 63;
/// Exponent of the subnormal unit `2^-1074`.
const SUBNORMAL_UNIT_EXP: i32 = -1074;

/// Weight scalar accepted by the sampler.
///
/// Implemented for `f32` and `f64`. Every `f32` value is exactly
/// representable as an `f64`, so both decode into the binary64 level domain
/// without rounding.
pub trait Weight: Float + Debug + Send + Sync + 'static {
    /// Exact widening to binary64.
    fn to_binary64(self) -> f64;
    /// Narrowing back from binary64; exact for values produced by
    /// [`Weight::to_binary64`].
    fn from_binary64(v: f64) -> Self;
}

impl Weight for f64 {
    #[inline]
    fn to_binary64(self) -> f64 {
        self
    }
    #[inline]
    fn from_binary64(v: f64) -> Self {
        v
    }
}

impl Weight for f32 {
    #[inline]
    fn to_binary64(self) -> f64 {
        f64::from(self)
    }
    #[inline]
    fn from_binary64(v: f64) -> Self {
        v as f32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightClass {
    /// `+0.0` or `-0.0`: the index is absent.
    Zero,
    /// Finite and strictly positive, normal or subnormal.
    Positive,
    /// Negative, NaN or infinite.
    Invalid,
}

/// A positive double factored as `sig * 2^level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DecodedWeight {
    pub level: i32,
    pub sig: u64,
}

impl DecodedWeight {
    /// Dense offset of this weight's level, in `0..NUM_LEVELS`.
    #[inline]
    pub fn offset(&self) -> usize {
        (self.level - LEVEL_MIN) as usize
    }
}

pub fn classify(w: f64) -> WeightClass {
    if w == 0.0 {
        WeightClass::Zero
    } else if w.is_finite() && w > 0.0 {
        WeightClass::Positive
    } else {
        WeightClass::Invalid
    }
}

/// Decodes a positive finite double. Returns [`EbusError::NotPositive`] for
/// anything [`classify`] does not report as `Positive`.
pub fn decode(w: f64) -> Result<DecodedWeight, EbusError> {
    if classify(w) != WeightClass::Positive {
        return Err(EbusError::NotPositive(w));
    }
    Ok(decode_positive(w))
}

/// Decode without the class check. `w` must be positive and finite.
#[inline]
pub(crate) fn decode_positive(w: f64) -> DecodedWeight {
    debug_assert!(classify(w) == WeightClass::Positive);
    let bits = w.to_bits();
    let biased = ((bits >> FRAC_BITS) & 0x7ff) as i32;
    let frac = bits & FRAC_MASK;
    if biased != 0 {
        DecodedWeight {
            level: biased - EXP_BIAS - 63,
            sig: (frac | (1 << FRAC_BITS)) << 11,
        }
    } else {
        // value = frac * 2^-1074 with frac != 0
        let lz = frac.leading_zeros();
        DecodedWeight {
            level: SUBNORMAL_UNIT_EXP - lz as i32,
            sig: frac << lz,
        }
    }
}

/// Inverse of [`decode`]: rebuilds the double `sig * 2^level`.
///
/// Fails when the significand is not normalized, the level is outside the
/// domain, or the value is not exactly representable as a double.
pub fn encode(d: DecodedWeight) -> Result<f64, EbusError> {
    let not_repr = || EbusError::NotRepresentable {
        level: d.level,
        sig: d.sig,
    };
    if d.sig >> 63 != 1 {
        return Err(not_repr());
    }
    level_index(d.level)?;
    if d.level >= LEVEL_MIN_NORMAL {
        if d.sig & 0x7ff != 0 {
            return Err(not_repr());
        }
        let biased = (d.level + 63 + EXP_BIAS) as u64;
        Ok(f64::from_bits(
            (biased << FRAC_BITS) | ((d.sig >> 11) & FRAC_MASK),
        ))
    } else {
        let shift = (SUBNORMAL_UNIT_EXP - d.level) as u32;
        let frac = d.sig >> shift;
        if frac << shift != d.sig {
            return Err(not_repr());
        }
        Ok(f64::from_bits(frac))
    }
}

/// Maps a level to its dense array offset in `0..NUM_LEVELS`.
pub fn level_index(level: i32) -> Result<usize, EbusError> {
    if (LEVEL_MIN..=LEVEL_MAX).contains(&level) {
        Ok((level - LEVEL_MIN) as usize)
    } else {
        Err(EbusError::LevelOutOfRange(level))
    }
}

/// Inverse of [`level_index`].
#[inline]
pub fn level_at(offset: usize) -> i32 {
    debug_assert!(offset < NUM_LEVELS);
    offset as i32 + LEVEL_MIN
}
