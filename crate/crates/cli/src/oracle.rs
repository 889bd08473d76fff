//! Brute-force exact probabilities, independent of the sampler's level store.

use ebus::{classify, decode, WeightClass};
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::HarnessError;

/// Exact rational `num / den`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactProb {
    pub num: BigUint,
    pub den: BigUint,
}

impl ExactProb {
    /// Double approximation from a 64-bit quotient, within one ulp.
    pub fn to_f64(&self) -> f64 {
        if self.num.is_zero() {
            return 0.0;
        }
        let k = 64 + self.den.bits() as i64 - self.num.bits() as i64;
        let q = if k >= 0 {
            (&self.num << k as usize) / &self.den
        } else {
            &self.num / (&self.den << (-k) as usize)
        };
        let mut v = q.to_f64().expect("quotient fits in a double");
        // Scale by 2^-k in steps that stay normal until the last one.
        let mut k = k;
        while k > 1000 {
            v *= 2f64.powi(-1000);
            k -= 1000;
        }
        v * 2f64.powi(-(k as i32))
    }
}

/// `p_j = σ_j 2^(ℓ_j - ℓ_min) / Σ_k σ_k 2^(ℓ_k - ℓ_min)`, zero weights giving zero.
pub fn oracle_probabilities(ws: &[f64]) -> Result<Vec<ExactProb>, HarnessError> {
    let mut decoded = Vec::with_capacity(ws.len());
    for (index, &w) in ws.iter().enumerate() {
        match classify(w) {
            WeightClass::Zero => decoded.push(None),
            WeightClass::Positive => {
                decoded.push(Some(decode(w).expect("positive weight decodes")))
            }
            WeightClass::Invalid => return Err(HarnessError::InvalidWeight { index, value: w }),
        }
    }
    let min_level = decoded
        .iter()
        .flatten()
        .map(|d| d.level)
        .min()
        .ok_or(HarnessError::AllZero)?;
    let scaled: Vec<BigUint> = decoded
        .iter()
        .map(|d| match d {
            Some(d) => BigUint::from(d.sig) << (d.level - min_level) as usize,
            None => BigUint::zero(),
        })
        .collect();
    let den: BigUint = scaled.iter().sum();
    Ok(scaled
        .into_iter()
        .map(|num| ExactProb {
            num,
            den: den.clone(),
        })
        .collect())
}

/// Oracle probabilities rounded to doubles.
pub fn oracle_f64(ws: &[f64]) -> Result<Vec<f64>, HarnessError> {
    Ok(oracle_probabilities(ws)?
        .iter()
        .map(ExactProb::to_f64)
        .collect())
}
