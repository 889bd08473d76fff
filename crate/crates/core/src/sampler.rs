//! Exact inter-level and intra-level sampling, and the public [`Sampler`].
//!
//! A draw first picks a level. `x` is drawn uniformly from `0..A` and the
//! nonempty levels are scanned from the top; inside level `ℓ` the first
//! `A_ℓ - 1` positions accept immediately and the last one, the boundary
//! point, stands for the fractional mass `f_ℓ = frac(SS_ℓ * 2^(ℓ+G))`. It is
//! accepted with probability exactly `f_ℓ` by comparing uniform 64-bit words
//! against the base-2^64 digits of `f_ℓ`; on rejection the whole draw
//! restarts. Within the chosen level, an entry is proposed uniformly from a
//! power-of-two range and accepted with probability `sig / 2^64`.

use std::marker::PhantomData;

use crate::error::EbusError;
use crate::float_decode::{classify, encode, level_at, Weight, WeightClass};
use crate::level_store::{Entry, LevelStore};
use crate::rng::RngSource;
use crate::shift_policy::{self, PolicyParams, ShiftEvent, ShiftKind};

/// Digit `floor(ss * 2^pos) mod 2^64`.
#[inline]
pub fn digit_at(ss: u128, pos: i32) -> u64 {
    if pos < 0 {
        let k = pos.unsigned_abs();
        if k >= 128 {
            0
        } else {
            (ss >> k) as u64
        }
    } else if pos >= 64 {
        0
    } else {
        (ss as u64) << pos
    }
}

/// Lazily reveals the base-2^64 digits of `frac(ss * 2^(level + shift))`.
#[derive(Debug, Clone, Copy)]
pub struct RefinementCursor {
    pos: i32,
    ss: u128,
}

impl RefinementCursor {
    pub fn new(ss: u128, level: i32, shift: i32) -> Self {
        Self {
            pos: level + shift,
            ss,
        }
    }

    /// Next fractional digit, and whether every later digit is zero.
    #[inline]
    pub fn next_digit(&mut self) -> (u64, bool) {
        self.pos += 64;
        (digit_at(self.ss, self.pos), self.pos >= 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    Accept,
    Restart,
}

/// Accepts the boundary point of a bucket with probability exactly
/// `frac(ss * 2^(level + shift))`.
pub fn refine_boundary<R: RngSource + ?Sized>(
    ss: u128,
    level: i32,
    shift: i32,
    rng: &mut R,
) -> Refinement {
    let mut cursor = RefinementCursor::new(ss, level, shift);
    loop {
        let (t, last) = cursor.next_digit();
        let r = rng.next_word();
        if r < t {
            return Refinement::Accept;
        }
        if r > t || last {
            return Refinement::Restart;
        }
    }
}

/// Counters for the hot paths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SamplerStats {
    pub samples: u64,
    /// Outer iterations of the level draw, including restarts.
    pub outer_rounds: u64,
    /// Times the draw landed on a bucket's boundary point.
    pub refinements: u64,
    pub restarts: u64,
    /// Proposals made by the within-level rejection loop.
    pub intra_rounds: u64,
    pub lazy_increases: u64,
}

/// Picks a level offset with probability exactly `W_ℓ / Σ W`.
///
/// The store must be nonempty with `A < 2^64`.
pub fn sample_level<R: RngSource + ?Sized>(
    store: &LevelStore,
    rng: &mut R,
    stats: &mut SamplerStats,
) -> Result<usize, EbusError> {
    let top = store.top_offset().ok_or(EbusError::EmptySampler)?;
    let total = u64::try_from(store.total_approx()).expect("total approximate mass below 2^64");
    'outer: loop {
        stats.outer_rounds += 1;
        let mut x = rng.uniform_below(total);
        let mut cursor = Some(top);
        while let Some(offset) = cursor {
            let rec = store.level(offset);
            let boundary = rec.approx() - 1;
            if x < boundary {
                return Ok(offset);
            }
            if x == boundary {
                stats.refinements += 1;
                match refine_boundary(rec.ss(), level_at(offset), store.shift(), rng) {
                    Refinement::Accept => return Ok(offset),
                    Refinement::Restart => {
                        stats.restarts += 1;
                        continue 'outer;
                    }
                }
            }
            x -= rec.approx();
            cursor = store.prev_occupied(offset);
        }
        unreachable!("x < A always lands in some bucket");
    }
}

/// Picks an entry with probability exactly `sig / Σ sig`. Returns the entry
/// and the number of proposals it took.
pub fn sample_within<R: RngSource + ?Sized>(
    entries: &[Entry],
    rng: &mut R,
) -> Result<(Entry, u64), EbusError> {
    let n = entries.len();
    if n == 0 {
        return Err(EbusError::EmptySampler);
    }
    let bits = n.next_power_of_two().trailing_zeros();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let slot = rng.uniform_bits(bits) as usize;
        let x = rng.next_word();
        if let Some(e) = entries.get(slot) {
            if x < e.sig {
                return Ok((*e, rounds));
            }
        }
    }
}

/// Dynamic exact sampler over indices `0..capacity` with weights of type `W`.
#[derive(Debug, Clone)]
pub struct Sampler<W: Weight = f64> {
    store: LevelStore,
    params: PolicyParams,
    stats: SamplerStats,
    shift_log: Option<Vec<ShiftEvent>>,
    _weight: PhantomData<fn() -> W>,
}

impl<W: Weight> Sampler<W> {
    /// Empty sampler with `capacity` absent indices.
    pub fn new(capacity: usize) -> Self {
        Self {
            store: LevelStore::new(capacity),
            params: PolicyParams::default(),
            stats: SamplerStats::default(),
            shift_log: None,
            _weight: PhantomData,
        }
    }

    pub fn with_params(capacity: usize, params: PolicyParams) -> Result<Self, EbusError> {
        params.validate()?;
        Ok(Self {
            params,
            ..Self::new(capacity)
        })
    }

    /// Builds a sampler holding `weights[i]` at index `i`, in one pass.
    pub fn from_weights(weights: &[W]) -> Result<Self, EbusError> {
        Self::from_weights_with_params(weights, PolicyParams::default())
    }

    pub fn from_weights_with_params(
        weights: &[W],
        params: PolicyParams,
    ) -> Result<Self, EbusError> {
        if let Some((index, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| classify(w.to_binary64()) == WeightClass::Invalid)
        {
            return Err(EbusError::InvalidWeight {
                index,
                value: w.to_binary64(),
            });
        }
        let mut sampler = Self::with_params(weights.len(), params)?;
        for (i, w) in weights.iter().enumerate() {
            sampler.update(i, *w)?;
        }
        Ok(sampler)
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.store.capacity()
    }

    /// Number of indices holding a positive weight.
    #[inline]
    pub fn live_count(&self) -> u64 {
        self.store.live_count()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    /// Weight stored at `index`; zero when absent or out of range.
    pub fn weight(&self, index: usize) -> W {
        self.store
            .get(index)
            .map(|d| W::from_binary64(encode(d).expect("stored weights decode from doubles")))
            .unwrap_or_else(W::zero)
    }

    /// Sets the weight at `index`. Zero removes it; `index == capacity`
    /// appends a new index.
    pub fn update(&mut self, index: usize, w: W) -> Result<(), EbusError> {
        let log = &mut self.shift_log;
        shift_policy::apply_update(&mut self.store, &self.params, index, w.to_binary64(), |e| {
            if let Some(log) = log.as_mut() {
                log.push(e);
            }
        })
    }

    /// Appends a new index holding `w` and returns it.
    pub fn push(&mut self, w: W) -> Result<usize, EbusError> {
        let index = self.capacity();
        if classify(w.to_binary64()) == WeightClass::Zero {
            self.store.push_slot();
            return Ok(index);
        }
        self.update(index, w)?;
        Ok(index)
    }

    /// Removes the weight at `index`, if any.
    pub fn remove(&mut self, index: usize) -> Result<(), EbusError> {
        self.update(index, W::zero())
    }

    /// Draws one index with probability exactly proportional to its weight.
    pub fn sample<R: RngSource + ?Sized>(&mut self, rng: &mut R) -> Result<usize, EbusError> {
        self.prepare_sampling()?;
        let offset = sample_level(&self.store, rng, &mut self.stats)?;
        let (entry, rounds) = sample_within(self.store.level(offset).entries(), rng)?;
        self.stats.samples += 1;
        self.stats.intra_rounds += rounds;
        Ok(entry.index)
    }

    /// Lazy shift increase shared by every sampling entry point.
    pub(crate) fn prepare_sampling(&mut self) -> Result<(), EbusError> {
        if let Some((change, report)) = shift_policy::lazy_increase(&mut self.store, &self.params)?
        {
            self.stats.lazy_increases += 1;
            if let Some(log) = self.shift_log.as_mut() {
                log.push(ShiftEvent {
                    kind: ShiftKind::LazyIncrease,
                    change,
                    window: report.window,
                    repaired: report.repaired,
                    total_after: self.store.total_approx(),
                });
            }
        }
        Ok(())
    }

    pub(crate) fn record_intra_rounds(&mut self, samples: u64, rounds: u64) {
        self.stats.samples += samples;
        self.stats.intra_rounds += rounds;
    }

    /// Current global shift `G`.
    #[inline]
    pub fn shift(&self) -> i32 {
        self.store.shift()
    }

    /// Total approximate mass `A`.
    #[inline]
    pub fn total_approx(&self) -> u128 {
        self.store.total_approx()
    }

    pub fn store(&self) -> &LevelStore {
        &self.store
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn stats(&self) -> &SamplerStats {
        &self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = SamplerStats::default();
    }

    /// Starts or stops recording shift changes.
    pub fn record_shifts(&mut self, enabled: bool) {
        self.shift_log = enabled.then(Vec::new);
    }

    /// Drains the recorded shift changes.
    pub fn take_shift_events(&mut self) -> Vec<ShiftEvent> {
        self.shift_log
            .as_mut()
            .map(std::mem::take)
            .unwrap_or_default()
    }

    /// Full-scan check of every maintained aggregate plus `A < 2^64`.
    pub fn check_invariants(&self) -> Result<(), String> {
        self.store.check_consistency()?;
        if self.store.total_approx() >> 64 != 0 {
            return Err(format!("unsafe shift: A = {}", self.store.total_approx()));
        }
        Ok(())
    }
}
