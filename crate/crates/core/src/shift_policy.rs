//! Global-shift policy and the repair of bucket sizes after a shift change.
//!
//! The global shift `G` scales every level weight before it is floored into
//! a 64-bit bucket. It must keep the total approximate mass `A(G)` below
//! `2^64` (safe), and should keep it at least `2^K` (good) so that the exact
//! boundary-refinement path stays rare. The policy:
//!
//! 1. first insertion into an empty sampler at level `λ`: `G = L0 + 1 - 64 - λ`;
//! 2. an insertion that would overflow its own bucket:
//!    `G = R - floor(log2 SS) - ℓ`;
//! 3. otherwise, an insertion that overflows the total: `G -= Δ`;
//! 4. deletions never change `G`;
//! 5. before sampling, if `A(G) < 2^K`, raise `G` to `L + 1 - 64 - t - λ`
//!    where `t` comes from [`coarse_estimate`].
//!
//! After any change only levels in `[θ, λ]` need their bucket recomputed,
//! where `θ(G, z) = -64 - G - floor(log2 z)` is evaluated at the larger of
//! the two shifts; everything below is a unit bucket at both shifts. That
//! window never exceeds 128 levels.

use crate::error::EbusError;
use crate::float_decode::{
    classify, decode_positive, level_at, DecodedWeight, WeightClass, LEVEL_MIN,
};
use crate::level_store::{recompute_approx, LevelStore};

/// Machine word size `b`.
pub const WORD_BITS: i32 = 64;

/// Tunable exponents of the policy. `b = 64` and `N = 2098` are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyParams {
    /// `L0`: initial mass lands in `[2^L0, 2^(L0+1))`.
    pub initial_exp: u32,
    /// `R`: an overflowing level is rescaled into `[2^R, 2^(R+1))`.
    pub level_reset_exp: u32,
    /// `K`: a shift is good when `A >= 2^K`.
    pub good_exp: u32,
    /// `L`: a lazy increase targets `A >= 2^L`.
    pub strong_exp: u32,
    /// `Δ`: step taken on total overflow.
    pub global_step: u32,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self {
            initial_exp: 39,
            level_reset_exp: 48,
            good_exp: 32,
            strong_exp: 46,
            global_step: 16,
        }
    }
}

impl PolicyParams {
    /// Checks `2 <= Δ <= R-K < b-K-2` and `log2 N < K <= L0 <= L < b - log2(b+10)`.
    pub fn validate(&self) -> Result<(), EbusError> {
        let b = WORD_BITS as i64;
        let (l0, r, k, l, d) = (
            i64::from(self.initial_exp),
            i64::from(self.level_reset_exp),
            i64::from(self.good_exp),
            i64::from(self.strong_exp),
            i64::from(self.global_step),
        );
        let fail = |msg: &str| Err(EbusError::InvalidParams(format!("{msg} ({self:?})")));
        if d < 2 {
            return fail("global step must be at least 2");
        }
        if d > r - k {
            return fail("global step exceeds R - K");
        }
        if r - k >= b - k - 2 {
            return fail("R - K must be below b - K - 2");
        }
        // log2(N) < K  <=>  N < 2^K
        if k >= b || (1u128 << k) <= crate::float_decode::NUM_LEVELS as u128 {
            return fail("2^K must exceed the number of levels");
        }
        if k > l0 || l0 > l {
            return fail("need K <= L0 <= L");
        }
        // L < b - log2(b+10)  <=>  (b+10) * 2^L < 2^b
        if l >= b || (b as u128 + 10) << l >= 1u128 << b {
            return fail("L too large for a safe lazy increase");
        }
        Ok(())
    }

    #[inline]
    fn good_threshold(&self) -> u128 {
        1u128 << self.good_exp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Down,
    Up,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftChange {
    pub old_g: i32,
    pub new_g: i32,
}

impl ShiftChange {
    pub fn direction(&self) -> Direction {
        if self.new_g < self.old_g {
            Direction::Down
        } else {
            Direction::Up
        }
    }
}

/// Which policy rule produced a shift change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    Init,
    LevelOverflow,
    GlobalOverflow,
    LazyIncrease,
}

/// One shift change as observed by instrumentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftEvent {
    pub kind: ShiftKind,
    pub change: ShiftChange,
    /// Candidate window `[θ, λ]` size the repair had to consider.
    pub window: usize,
    /// Number of nonempty levels whose bucket the repair recomputed.
    pub repaired: usize,
    /// `A` once the enclosing operation finished.
    pub total_after: u128,
}

/// Result of [`repair_after_shift`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RepairReport {
    pub window: usize,
    pub repaired: usize,
}

#[inline]
fn floor_log2_u64(z: u64) -> i32 {
    63 - z.leading_zeros() as i32
}

#[inline]
fn floor_log2_u128(v: u128) -> i32 {
    127 - v.leading_zeros() as i32
}

/// `θ(G, z)`: levels below it are unit buckets at shift `G`.
#[inline]
pub fn unit_threshold(shift: i32, live: u64) -> i32 {
    -WORD_BITS - shift - floor_log2_u64(live)
}

/// `η(G)`: levels below it depend only on the upper 64 bits of their sum.
#[inline]
pub fn upper_half_threshold(shift: i32) -> i32 {
    -WORD_BITS - shift
}

pub fn init_shift(params: &PolicyParams, top_level: i32) -> i32 {
    params.initial_exp as i32 + 1 - WORD_BITS - top_level
}

/// Shift that puts a level with exact sum `ss` into `[2^R, 2^(R+1))`.
pub fn level_overflow_shift(params: &PolicyParams, ss: u128, level: i32) -> Result<i32, EbusError> {
    if ss == 0 {
        return Err(EbusError::InvalidParams(
            "level overflow shift needs a positive sum".into(),
        ));
    }
    Ok(params.level_reset_exp as i32 - floor_log2_u128(ss) - level)
}

pub fn global_overflow_shift(params: &PolicyParams, shift: i32) -> i32 {
    shift - params.global_step as i32
}

/// Coarse estimate `E` of the top-normalized mass and `t = floor(log2 max(E, 1))`.
///
/// Uses only the upper 64 bits of the 65 levels at and below the top level.
pub fn coarse_estimate(store: &LevelStore) -> Result<(u128, u32), EbusError> {
    let top = store.top_level().ok_or(EbusError::EmptySampler)?;
    let mut estimate = 0u128;
    for r in 0..=WORD_BITS {
        let level = top - r;
        if level < LEVEL_MIN {
            break;
        }
        let high = store.level(level_at_offset(level)).ss() >> 64;
        estimate += if r == 0 { high << 1 } else { high >> (r - 1) };
    }
    let t = floor_log2_u128(estimate.max(1)) as u32;
    Ok((estimate, t))
}

#[inline]
fn level_at_offset(level: i32) -> usize {
    (level - LEVEL_MIN) as usize
}

/// Restores every bucket size for `change.new_g`, assuming they are exact for
/// `change.old_g`, and installs the new shift.
pub fn repair_after_shift(store: &mut LevelStore, change: ShiftChange) -> RepairReport {
    let ShiftChange { old_g, new_g } = change;
    store.set_shift(new_g);
    if old_g == new_g {
        return RepairReport::default();
    }
    let Some(top) = store.top_offset() else {
        return RepairReport::default();
    };
    let live = store.live_count();
    let low = unit_threshold(old_g.max(new_g), live).max(LEVEL_MIN);
    let low_offset = (low - LEVEL_MIN) as usize;
    if low_offset > top {
        return RepairReport::default();
    }
    let mut report = RepairReport {
        window: top - low_offset + 1,
        repaired: 0,
    };
    let mut cursor = Some(top);
    match change.direction() {
        Direction::Down => {
            let unit_below = unit_threshold(new_g, live);
            let drop = (old_g - new_g) as u32;
            while let Some(offset) = cursor.filter(|&o| o >= low_offset) {
                let level = level_at(offset);
                let approx = if level < unit_below {
                    1
                } else {
                    let q = store.level(offset).approx() - 1;
                    (if drop >= 64 { 0 } else { q >> drop }) + 1
                };
                store.set_approx(offset, approx);
                report.repaired += 1;
                cursor = store.prev_occupied(offset);
            }
        }
        Direction::Up => {
            let full_from = upper_half_threshold(new_g);
            while let Some(offset) = cursor.filter(|&o| o >= low_offset) {
                let level = level_at(offset);
                let ss = store.level(offset).ss();
                let approx = if level < full_from {
                    let high = (ss >> 64) as u64;
                    let k = (-(level + new_g + WORD_BITS)) as u32;
                    (if k >= 64 { 0 } else { high >> k }) + 1
                } else {
                    recompute_approx(ss, level, new_g)
                        .expect("policy only raises the shift to a safe value")
                };
                store.set_approx(offset, approx);
                report.repaired += 1;
                cursor = store.prev_occupied(offset);
            }
        }
    }
    report
}

/// Raises the shift before sampling when `A(G) < 2^K`.
pub fn lazy_increase(
    store: &mut LevelStore,
    params: &PolicyParams,
) -> Result<Option<(ShiftChange, RepairReport)>, EbusError> {
    if store.is_empty() {
        return Err(EbusError::EmptySampler);
    }
    if store.total_approx() >= params.good_threshold() {
        return Ok(None);
    }
    let (_, t) = coarse_estimate(store)?;
    let top = store.top_level().expect("nonempty");
    let change = ShiftChange {
        old_g: store.shift(),
        new_g: params.strong_exp as i32 + 1 - WORD_BITS - t as i32 - top,
    };
    debug_assert!(change.new_g > change.old_g);
    let report = repair_after_shift(store, change);
    Ok(Some((change, report)))
}

/// Sets index `index` to weight `w` (zero deletes), applying the policy.
///
/// `index == capacity` appends a new slot. Shift changes are reported to
/// `observe` after the update has completed.
pub fn apply_update(
    store: &mut LevelStore,
    params: &PolicyParams,
    index: usize,
    w: f64,
    mut observe: impl FnMut(ShiftEvent),
) -> Result<(), EbusError> {
    let class = classify(w);
    if class == WeightClass::Invalid {
        return Err(EbusError::InvalidWeight { index, value: w });
    }
    let capacity = store.capacity();
    if index > capacity {
        return Err(EbusError::IndexOutOfRange { index, capacity });
    }
    if index == capacity {
        if class == WeightClass::Zero {
            return Ok(());
        }
        store.push_slot();
    }
    if store.location(index).is_some() {
        store.delete_entry(index)?;
    }
    if class == WeightClass::Zero {
        return Ok(());
    }
    let d = decode_positive(w);
    let mut pending: [Option<(ShiftKind, ShiftChange, RepairReport)>; 4] = [None; 4];
    let mut n_pending = 0;
    insert_with_policy(store, params, index, d, |kind, change, report| {
        pending[n_pending] = Some((kind, change, report));
        n_pending += 1;
    })?;
    let total_after = store.total_approx();
    for (kind, change, report) in pending.into_iter().flatten() {
        observe(ShiftEvent {
            kind,
            change,
            window: report.window,
            repaired: report.repaired,
            total_after,
        });
    }
    Ok(())
}

fn insert_with_policy(
    store: &mut LevelStore,
    params: &PolicyParams,
    index: usize,
    d: DecodedWeight,
    mut record: impl FnMut(ShiftKind, ShiftChange, RepairReport),
) -> Result<(), EbusError> {
    let word_limit = 1u128 << WORD_BITS;
    if store.is_empty() {
        let change = ShiftChange {
            old_g: store.shift(),
            new_g: init_shift(params, d.level),
        };
        store.set_shift(change.new_g);
        store.insert_entry(index, d)?;
        record(ShiftKind::Init, change, RepairReport::default());
        return Ok(());
    }
    let prospective = store.level(d.offset()).ss() + u128::from(d.sig);
    if recompute_approx(prospective, d.level, store.shift()).is_err() {
        let change = ShiftChange {
            old_g: store.shift(),
            new_g: level_overflow_shift(params, prospective, d.level)?,
        };
        let report = repair_after_shift(store, change);
        record(ShiftKind::LevelOverflow, change, report);
    }
    store.insert_entry(index, d)?;
    // One step suffices when the parameters validate; the loop guards
    // configurations outside the policy's hypotheses.
    while store.total_approx() >= word_limit {
        let change = ShiftChange {
            old_g: store.shift(),
            new_g: global_overflow_shift(params, store.shift()),
        };
        let report = repair_after_shift(store, change);
        record(ShiftKind::GlobalOverflow, change, report);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::float_decode::{decode, level_index};

    fn full_recompute_matches(store: &LevelStore) {
        store.check_consistency().unwrap();
    }

    fn noop(_: ShiftEvent) {}

    #[test]
    fn default_params_validate() {
        PolicyParams::default().validate().unwrap();
    }

    #[test]
    fn bad_params_are_rejected() {
        let base = PolicyParams::default();
        let cases = [
            PolicyParams {
                global_step: 1,
                ..base
            },
            PolicyParams {
                global_step: 17,
                ..base
            },
            PolicyParams {
                good_exp: 11,
                initial_exp: 39,
                ..base
            },
            PolicyParams {
                initial_exp: 47,
                ..base
            },
            PolicyParams {
                strong_exp: 58,
                ..base
            },
            PolicyParams {
                level_reset_exp: 62,
                ..base
            },
        ];
        for p in cases {
            assert!(p.validate().is_err(), "{p:?}");
        }
        PolicyParams {
            strong_exp: 57,
            ..base
        }
        .validate()
        .unwrap();
        PolicyParams {
            good_exp: 12,
            initial_exp: 12,
            strong_exp: 12,
            level_reset_exp: 28,
            ..base
        }
        .validate()
        .unwrap();
    }

    #[test]
    fn init_shift_examples() {
        let p = PolicyParams::default();
        assert_eq!(init_shift(&p, -63), 39);
        assert_eq!(init_shift(&p, 960), -984);
    }

    #[test]
    fn level_overflow_shift_examples() {
        let p = PolicyParams::default();
        assert_eq!(level_overflow_shift(&p, 1 << 63, 0).unwrap(), -15);
        assert_eq!(level_overflow_shift(&p, 1 << 64, -63).unwrap(), 47);
        // 2^64 * 2^(-63 + 47) = 2^48
        assert_eq!(recompute_approx(1 << 64, -63, 47), Ok((1 << 48) + 1));
        assert!(level_overflow_shift(&p, 0, 0).is_err());
    }

    #[test]
    fn global_overflow_shift_examples() {
        let p = PolicyParams::default();
        assert_eq!(global_overflow_shift(&p, 10), -6);
        assert_eq!(global_overflow_shift(&p, 39), 23);
    }

    fn store_with_sums(sums: &[(i32, u128)]) -> LevelStore {
        // Builds levels whose exact sums are the given values by inserting
        // top-bit significands.
        let count: usize = sums.iter().map(|(_, s)| (s >> 63) as usize).sum();
        let mut st = LevelStore::new(count);
        st.set_shift(-2000);
        let mut idx = 0;
        for &(level, ss) in sums {
            assert_eq!(ss % (1 << 63), 0);
            for _ in 0..(ss >> 63) {
                st.insert_entry(
                    idx,
                    DecodedWeight {
                        level,
                        sig: 1 << 63,
                    },
                )
                .unwrap();
                idx += 1;
            }
        }
        st
    }

    #[test]
    fn coarse_estimate_examples() {
        let st = store_with_sums(&[(-63, 1 << 63)]);
        assert_eq!(coarse_estimate(&st).unwrap(), (0, 0));
        let st = store_with_sums(&[(10, 1 << 65)]);
        assert_eq!(coarse_estimate(&st).unwrap(), (4, 2));
        let st = store_with_sums(&[(10, 1 << 64), (9, 1 << 64)]);
        assert_eq!(coarse_estimate(&st).unwrap(), (3, 1));
        assert_eq!(
            coarse_estimate(&LevelStore::new(0)),
            Err(EbusError::EmptySampler)
        );
    }

    #[test]
    fn lazy_increase_single_weight() {
        let p = PolicyParams::default();
        let mut st = LevelStore::new(1);
        apply_update(&mut st, &p, 0, 1.0, noop).unwrap();
        assert_eq!(st.shift(), 39);
        // Not below 2^K yet.
        assert!(lazy_increase(&mut st, &p).unwrap().is_none());
        // Force a poor shift by hand and repair it down.
        let change = ShiftChange {
            old_g: 39,
            new_g: 20,
        };
        repair_after_shift(&mut st, change);
        assert!(st.total_approx() < 1 << 32);
        let (change, _) = lazy_increase(&mut st, &p).unwrap().unwrap();
        assert_eq!(change.new_g, 46);
        assert_eq!(st.total_approx(), (1 << 46) + 1);
        full_recompute_matches(&st);
    }

    #[test]
    fn lazy_increase_threshold_boundary() {
        let p = PolicyParams::default();
        // Just below 1.0: sig = 2^64 - 2^11 at level -64, so A = 2^32 at G = 32.
        let mut st = LevelStore::new(1);
        st.set_shift(32);
        let w = 1.0 - f64::EPSILON / 2.0;
        st.insert_entry(0, decode(w).unwrap()).unwrap();
        assert_eq!(st.total_approx(), 1 << 32);
        assert!(lazy_increase(&mut st, &p).unwrap().is_none());

        let mut st = LevelStore::new(1);
        st.set_shift(31);
        st.insert_entry(0, decode(w).unwrap()).unwrap();
        assert_eq!(st.total_approx(), 1 << 31);
        assert!(lazy_increase(&mut st, &p).unwrap().is_some());
        full_recompute_matches(&st);

        let mut st = LevelStore::new(1);
        st.set_shift(32);
        st.insert_entry(0, decode(w).unwrap()).unwrap();
        st.delete_entry(0).unwrap();
        assert_eq!(lazy_increase(&mut st, &p), Err(EbusError::EmptySampler));
    }

    #[test]
    fn lazy_increase_just_below_threshold() {
        let p = PolicyParams::default();
        let mut st = LevelStore::new(1);
        // floor(sig * 2^-32) = 2^32 - 2, so A = 2^32 - 1.
        let sig = ((1u64 << 32) - 2) << 32;
        st.insert_entry(0, DecodedWeight { level: -32, sig })
            .unwrap();
        assert_eq!(st.total_approx(), (1 << 32) - 1);
        let (change, _) = lazy_increase(&mut st, &p).unwrap().unwrap();
        assert!(change.new_g > 0);
        let a = st.total_approx();
        assert!((1 << 46..74 << 46).contains(&a), "{a}");
        full_recompute_matches(&st);
    }

    #[test]
    fn apply_update_examples() {
        let p = PolicyParams::default();
        let mut st = LevelStore::new(1);
        let mut events = Vec::new();
        apply_update(&mut st, &p, 0, 1.0, |e| events.push(e)).unwrap();
        assert_eq!(st.shift(), 39);
        assert_eq!(st.total_approx(), (1 << 39) + 1);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].kind, ShiftKind::Init);

        apply_update(&mut st, &p, 0, 0.0, noop).unwrap();
        assert!(st.is_empty());
        assert_eq!(st.shift(), 39);

        apply_update(&mut st, &p, 0, 1.0, noop).unwrap();
        apply_update(&mut st, &p, 0, 2.0, noop).unwrap();
        assert_eq!(st.level(level_index(-63).unwrap()).ss(), 0);
        assert_eq!(st.level(level_index(-62).unwrap()).ss(), 1 << 63);
        full_recompute_matches(&st);
    }

    #[test]
    fn apply_update_rejects_invalid_and_gaps() {
        let p = PolicyParams::default();
        let mut st = LevelStore::new(2);
        assert!(matches!(
            apply_update(&mut st, &p, 0, -1.0, noop),
            Err(EbusError::InvalidWeight { index: 0, .. })
        ));
        assert!(apply_update(&mut st, &p, 0, f64::NAN, noop).is_err());
        assert!(matches!(
            apply_update(&mut st, &p, 3, 1.0, noop),
            Err(EbusError::IndexOutOfRange {
                index: 3,
                capacity: 2
            })
        ));
        apply_update(&mut st, &p, 2, 1.0, noop).unwrap();
        assert_eq!(st.capacity(), 3);
    }

    #[test]
    fn level_overflow_triggers_eager_decrease() {
        let p = PolicyParams::default();
        let mut st = LevelStore::new(2);
        let mut events = Vec::new();
        apply_update(&mut st, &p, 0, 1.0, |e| events.push(e)).unwrap();
        // 2^40 sits 40 levels higher: bucket ~ 2^79 at G = 39.
        apply_update(&mut st, &p, 1, 2f64.powi(40), |e| events.push(e)).unwrap();
        assert_eq!(events[1].kind, ShiftKind::LevelOverflow);
        assert_eq!(events[1].change.new_g, 48 - 63 - (40 - 63));
        assert!(st.total_approx() >= 1 << 32 && st.total_approx() < 1 << 64);
        full_recompute_matches(&st);
    }

    #[test]
    fn global_overflow_triggers_step() {
        let p = PolicyParams::default();
        let n = 1 << 13;
        let mut st = LevelStore::new(0);
        let mut kinds = Vec::new();
        // Many levels each close to the per-bucket limit.
        for i in 0..n {
            let w = 2f64.powi((i % 40) as i32);
            apply_update(&mut st, &p, i, w, |e| kinds.push(e.kind)).unwrap();
            assert!(st.total_approx() < 1 << 64);
        }
        assert!(
            kinds.contains(&ShiftKind::GlobalOverflow) || kinds.contains(&ShiftKind::LevelOverflow)
        );
        full_recompute_matches(&st);
    }

    #[test]
    fn downward_rescale_formula() {
        // floor((5 - 1) / 2^2) + 1 = 2
        let mut st = LevelStore::new(1);
        st.set_shift(0);
        st.insert_entry(
            0,
            DecodedWeight {
                level: -61,
                sig: 1 << 63,
            },
        )
        .unwrap();
        assert_eq!(st.total_approx(), 5);
        repair_after_shift(
            &mut st,
            ShiftChange {
                old_g: 0,
                new_g: -2,
            },
        );
        assert_eq!(st.total_approx(), 2);
        full_recompute_matches(&st);
    }

    #[test]
    fn low_unit_buckets_are_left_alone() {
        let p = PolicyParams::default();
        let mut st = LevelStore::new(2);
        apply_update(&mut st, &p, 0, 1.0, noop).unwrap();
        apply_update(&mut st, &p, 1, 1e-300, noop).unwrap();
        let low = decode(1e-300).unwrap().offset();
        assert_eq!(st.level(low).approx(), 1);
        let report = repair_after_shift(
            &mut st,
            ShiftChange {
                old_g: 39,
                new_g: 23,
            },
        );
        assert_eq!(st.level(low).approx(), 1);
        assert!(report.window <= 128);
        assert_eq!(report.repaired, 1);
        full_recompute_matches(&st);
    }
}
