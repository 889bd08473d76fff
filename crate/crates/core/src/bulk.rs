//! Exact bulk sampling.
//!
//! `m` independent draws are equivalent to drawing the per-level counts from
//! `Multinomial(m; W_ℓ / W)` and then `C_ℓ` within-level draws per level. The
//! counts are built level by level: with `R` draws still unassigned, level
//! `ℓ` takes `Binomial(R, W_ℓ / Σ_{r after ℓ} W_r)`, the last level takes the
//! remainder. All ratios are exact because level weights scaled to the
//! lowest occupied level are integers held in [`WideInt`].
//!
//! Binomials are drawn as `R` exact Bernoulli trials, `O(m)` wide operations
//! per batch.

use crate::error::EbusError;
use crate::float_decode::{level_at, Weight};
use crate::level_store::LevelStore;
use crate::rng::RngSource;
use crate::sampler::{sample_within, Sampler};
use crate::wide::WideInt;

/// Upper bound on bit length of any scaled level weight or suffix sum.
pub const SCALED_BITS_BOUND: u32 = 128 + crate::float_decode::NUM_LEVELS as u32;

/// Per-level draw counts, highest level first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LevelCounts {
    pub counts: Vec<(i32, u64)>,
    pub total: u64,
}

/// `SS_ℓ * 2^(ℓ - ℓ_min)` for every nonempty level, highest level first.
pub fn scaled_level_weights(store: &LevelStore) -> Result<Vec<(i32, WideInt)>, EbusError> {
    let lowest = store.lowest_occupied().ok_or(EbusError::EmptySampler)?;
    let out: Vec<(i32, WideInt)> = store
        .occupied_desc()
        .map(|offset| {
            let w = WideInt::from_u128(store.level(offset).ss()) << (offset - lowest) as u32;
            debug_assert!(w.bits() <= SCALED_BITS_BOUND);
            (level_at(offset), w)
        })
        .collect();
    Ok(out)
}

/// `suffix[i] = Σ_{k >= i} weights[k]`.
pub fn suffix_sums(weights: &[(i32, WideInt)]) -> Vec<WideInt> {
    let mut out = vec![WideInt::ZERO; weights.len()];
    let mut acc = WideInt::ZERO;
    for (i, (_, w)) in weights.iter().enumerate().rev() {
        acc += *w;
        debug_assert!(acc.bits() <= SCALED_BITS_BOUND);
        out[i] = acc;
    }
    out
}

/// `true` with probability exactly `num / den`.
pub fn exact_bernoulli<R: RngSource + ?Sized>(
    rng: &mut R,
    num: &WideInt,
    den: &WideInt,
) -> Result<bool, EbusError> {
    if num > den {
        return Err(EbusError::ProbabilityAboveOne);
    }
    if den.is_zero() {
        return Err(EbusError::ProbabilityAboveOne);
    }
    if num.is_zero() {
        return Ok(false);
    }
    if num == den {
        return Ok(true);
    }
    Ok(WideInt::uniform_below(rng, den) < *num)
}

/// Exact `Binomial(trials, num / den)` as a sum of Bernoulli trials.
pub fn exact_binomial<R: RngSource + ?Sized>(
    rng: &mut R,
    trials: u64,
    num: &WideInt,
    den: &WideInt,
) -> Result<u64, EbusError> {
    let mut hits = 0;
    for _ in 0..trials {
        hits += u64::from(exact_bernoulli(rng, num, den)?);
    }
    Ok(hits)
}

/// Multinomial level counts for `m` draws from the store's current weights.
pub fn level_counts<R: RngSource + ?Sized>(
    store: &LevelStore,
    m: u64,
    rng: &mut R,
) -> Result<LevelCounts, EbusError> {
    if store.is_empty() {
        if m == 0 {
            return Ok(LevelCounts::default());
        }
        return Err(EbusError::EmptySampler);
    }
    let weights = scaled_level_weights(store)?;
    let suffix = suffix_sums(&weights);
    let mut remaining = m;
    let mut counts = Vec::with_capacity(weights.len());
    let last = weights.len() - 1;
    for (i, (level, w)) in weights.iter().enumerate() {
        let c = if i == last {
            remaining
        } else {
            exact_binomial(rng, remaining, w, &suffix[i])?
        };
        remaining -= c;
        counts.push((*level, c));
    }
    debug_assert_eq!(remaining, 0);
    Ok(LevelCounts { counts, total: m })
}

impl<W: Weight> Sampler<W> {
    /// `m` independent draws, grouped by level (highest first) and in draw
    /// order within a level. The multiset has the law of `m` calls to
    /// [`Sampler::sample`]; shuffle if the order matters.
    pub fn sample_many<R: RngSource + ?Sized>(
        &mut self,
        m: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>, EbusError> {
        if m == 0 {
            return Ok(Vec::new());
        }
        self.prepare_sampling()?;
        let counts = level_counts(self.store(), m as u64, rng)?;
        let mut out = Vec::with_capacity(m);
        let mut rounds = 0;
        for (level, c) in counts.counts {
            let entries = self
                .store()
                .level((level - crate::float_decode::LEVEL_MIN) as usize)
                .entries();
            for _ in 0..c {
                let (e, r) = sample_within(entries, rng)?;
                rounds += r;
                out.push(e.index);
            }
        }
        self.record_intra_rounds(m as u64, rounds);
        Ok(out)
    }
}
