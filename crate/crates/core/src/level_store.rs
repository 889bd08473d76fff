//! Per-level exact and approximate state, entry arrays and the locator table.
//!
//! Each level `ℓ` keeps the exact 128-bit sum `ss` of its normalized
//! significands and the bucket size `approx = floor(ss * 2^(ℓ+G)) + 1`
//! (zero for an empty level), where `G` is the global shift. The store only
//! maintains these quantities for a given `G`; choosing and changing `G` is
//! the job of [`crate::shift_policy`].

use crate::error::EbusError;
use crate::float_decode::{level_at, DecodedWeight, LEVEL_MIN, NUM_LEVELS};

/// Words in the occupancy bitmap (`ceil(2098 / 64)`).
pub const OCC_WORDS: usize = NUM_LEVELS.div_ceil(64);

const SHRINK_MIN_CAPACITY: usize = 16;

/// One stored weight inside a level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub sig: u64,
    pub index: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LevelRecord {
    ss: u128,
    approx: u64,
    entries: Vec<Entry>,
}

impl LevelRecord {
    /// Exact sum of the level's normalized significands.
    #[inline]
    pub fn ss(&self) -> u128 {
        self.ss
    }

    /// Approximate bucket size at the store's current shift.
    #[inline]
    pub fn approx(&self) -> u64 {
        self.approx
    }

    #[inline]
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Position of a live index: level offset and slot inside that level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub offset: u16,
    pub pos: u32,
}

/// `floor(ss * 2^(level+shift)) + 1` does not fit in 64 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApproxOverflow;

/// Bucket size of a level with exact sum `ss` at shift `shift`.
///
/// Zero for an empty level. Returns [`ApproxOverflow`] instead of a
/// truncated value when the result would be `>= 2^64`.
#[inline]
pub fn recompute_approx(ss: u128, level: i32, shift: i32) -> Result<u64, ApproxOverflow> {
    if ss == 0 {
        return Ok(0);
    }
    let e = level + shift;
    let floor = if e <= 0 {
        let k = e.unsigned_abs();
        if k >= 128 {
            0
        } else {
            ss >> k
        }
    } else {
        let k = e as u32;
        if k >= 128 || ss.leading_zeros() < k {
            return Err(ApproxOverflow);
        }
        ss << k
    };
    if floor >= u128::from(u64::MAX) {
        Err(ApproxOverflow)
    } else {
        Ok(floor as u64 + 1)
    }
}

/// Aggregates recomputed from the raw entry arrays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Summary {
    pub ss: Vec<u128>,
    pub approx: Vec<u64>,
    pub total_approx: u128,
    pub live: u64,
    pub top: Option<i32>,
}

#[derive(Debug, Clone)]
pub struct LevelStore {
    levels: Vec<LevelRecord>,
    locator: Vec<Option<Location>>,
    shift: i32,
    total_approx: u128,
    live: u64,
    top: Option<usize>,
    occupancy: [u64; OCC_WORDS],
}

impl LevelStore {
    pub fn new(capacity: usize) -> Self {
        Self {
            levels: vec![LevelRecord::default(); NUM_LEVELS],
            locator: vec![None; capacity],
            shift: 0,
            total_approx: 0,
            live: 0,
            top: None,
            occupancy: [0; OCC_WORDS],
        }
    }

    /// Current external index bound.
    #[inline]
    pub fn capacity(&self) -> usize {
        self.locator.len()
    }

    /// Extends the index domain by one absent slot and returns its index.
    pub fn push_slot(&mut self) -> usize {
        self.locator.push(None);
        self.locator.len() - 1
    }

    #[inline]
    pub fn shift(&self) -> i32 {
        self.shift
    }

    /// Total approximate mass `A = Σ approx`. May exceed `2^64` only inside
    /// an update, before the policy corrects the shift.
    #[inline]
    pub fn total_approx(&self) -> u128 {
        self.total_approx
    }

    /// Number of live (nonzero) weights.
    #[inline]
    pub fn live_count(&self) -> u64 {
        self.live
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    /// Record for a dense level offset.
    #[inline]
    pub fn level(&self, offset: usize) -> &LevelRecord {
        &self.levels[offset]
    }

    pub fn levels(&self) -> &[LevelRecord] {
        &self.levels
    }

    #[inline]
    pub fn location(&self, index: usize) -> Option<Location> {
        self.locator.get(index).copied().flatten()
    }

    /// Decoded weight currently stored at `index`, if any.
    pub fn get(&self, index: usize) -> Option<DecodedWeight> {
        self.location(index).map(|loc| {
            let offset = usize::from(loc.offset);
            DecodedWeight {
                level: level_at(offset),
                sig: self.levels[offset].entries[loc.pos as usize].sig,
            }
        })
    }

    /// Largest nonempty level.
    #[inline]
    pub fn top_level(&self) -> Option<i32> {
        self.top.map(level_at)
    }

    /// Dense offset of the largest nonempty level.
    #[inline]
    pub fn top_offset(&self) -> Option<usize> {
        self.top
    }

    /// Highest set bit of the occupancy bitmap.
    pub fn highest_nonempty(&self) -> Option<usize> {
        self.occupancy
            .iter()
            .enumerate()
            .rev()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    /// Highest occupied offset strictly below `offset`.
    #[inline]
    pub fn prev_occupied(&self, offset: usize) -> Option<usize> {
        if offset == 0 {
            return None;
        }
        let below = offset - 1;
        let mut word = below / 64;
        let bit = below % 64;
        let mut w = self.occupancy[word] & (u64::MAX >> (63 - bit));
        loop {
            if w != 0 {
                return Some(word * 64 + 63 - w.leading_zeros() as usize);
            }
            if word == 0 {
                return None;
            }
            word -= 1;
            w = self.occupancy[word];
        }
    }

    /// Occupied offsets, highest first.
    pub fn occupied_desc(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(self.top, move |&o| self.prev_occupied(o))
    }

    /// Lowest occupied offset.
    pub fn lowest_occupied(&self) -> Option<usize> {
        self.occupancy
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    /// Appends `(d.sig, index)` to its level and updates every aggregate.
    ///
    /// # Panics
    ///
    /// If the level's bucket would overflow at the current shift. The shift
    /// policy checks for this before inserting.
    pub fn insert_entry(&mut self, index: usize, d: DecodedWeight) -> Result<(), EbusError> {
        let capacity = self.capacity();
        match self.locator.get(index) {
            None => return Err(EbusError::IndexOutOfRange { index, capacity }),
            Some(Some(_)) => return Err(EbusError::DuplicateIndex(index)),
            Some(None) => {}
        }
        let offset = d.offset();
        let shift = self.shift;
        let rec = &mut self.levels[offset];
        let pos = rec.entries.len();
        rec.entries.push(Entry { sig: d.sig, index });
        rec.ss += u128::from(d.sig);
        let approx = recompute_approx(rec.ss, d.level, shift)
            .expect("shift policy must prevent bucket overflow before insertion");
        let old = std::mem::replace(&mut rec.approx, approx);
        self.total_approx = self.total_approx - u128::from(old) + u128::from(approx);
        self.locator[index] = Some(Location {
            offset: offset as u16,
            pos: u32::try_from(pos).expect("level holds more than u32::MAX entries"),
        });
        self.live += 1;
        if pos == 0 {
            self.occupancy[offset / 64] |= 1 << (offset % 64);
            if self.top.is_none_or(|t| offset > t) {
                self.top = Some(offset);
            }
        }
        Ok(())
    }

    /// Swap-removes `index` from its level and returns the removed weight.
    pub fn delete_entry(&mut self, index: usize) -> Result<DecodedWeight, EbusError> {
        let loc = self.location(index).ok_or(EbusError::AbsentIndex(index))?;
        let offset = usize::from(loc.offset);
        let level = level_at(offset);
        let shift = self.shift;
        let rec = &mut self.levels[offset];
        let removed = rec.entries.swap_remove(loc.pos as usize);
        debug_assert_eq!(removed.index, index);
        if let Some(moved) = rec.entries.get(loc.pos as usize) {
            self.locator[moved.index] = Some(loc);
        }
        let cap = rec.entries.capacity();
        if cap > SHRINK_MIN_CAPACITY && rec.entries.len() < cap / 4 {
            rec.entries.shrink_to(cap / 2);
        }
        rec.ss -= u128::from(removed.sig);
        let approx = recompute_approx(rec.ss, level, shift).expect("deletion cannot grow a bucket");
        self.total_approx = self.total_approx - u128::from(rec.approx) + u128::from(approx);
        rec.approx = approx;
        let emptied = rec.entries.is_empty();
        self.locator[index] = None;
        self.live -= 1;
        if emptied {
            debug_assert_eq!(self.levels[offset].ss, 0);
            self.occupancy[offset / 64] &= !(1 << (offset % 64));
            if self.top == Some(offset) {
                self.top = self.prev_occupied(offset);
            }
        }
        Ok(DecodedWeight {
            level,
            sig: removed.sig,
        })
    }

    pub(crate) fn set_shift(&mut self, shift: i32) {
        self.shift = shift;
    }

    /// Overwrites one bucket size, keeping the total in sync.
    #[inline]
    pub(crate) fn set_approx(&mut self, offset: usize, approx: u64) {
        let rec = &mut self.levels[offset];
        self.total_approx = self.total_approx - u128::from(rec.approx) + u128::from(approx);
        rec.approx = approx;
    }

    /// Recomputes every aggregate from the raw entry arrays at the current
    /// shift. Levels whose bucket would overflow report `u64::MAX`.
    pub fn recompute_summary(&self) -> Summary {
        let mut ss = vec![0u128; NUM_LEVELS];
        let mut approx = vec![0u64; NUM_LEVELS];
        let mut live = 0u64;
        let mut top = None;
        for (offset, rec) in self.levels.iter().enumerate() {
            let sum: u128 = rec.entries.iter().map(|e| u128::from(e.sig)).sum();
            ss[offset] = sum;
            approx[offset] =
                recompute_approx(sum, offset as i32 + LEVEL_MIN, self.shift).unwrap_or(u64::MAX);
            live += rec.entries.len() as u64;
            if sum > 0 {
                top = Some(offset as i32 + LEVEL_MIN);
            }
        }
        let total_approx = approx.iter().map(|&a| u128::from(a)).sum();
        Summary {
            ss,
            approx,
            total_approx,
            live,
            top,
        }
    }

    /// Full-scan consistency check: maintained aggregates against a
    /// from-scratch recomputation, occupancy bits, and locator soundness.
    pub fn check_consistency(&self) -> Result<(), String> {
        let fresh = self.recompute_summary();
        for (offset, rec) in self.levels.iter().enumerate() {
            let level = level_at(offset);
            if rec.ss != fresh.ss[offset] {
                return Err(format!(
                    "level {level}: ss {} != {}",
                    rec.ss, fresh.ss[offset]
                ));
            }
            if rec.approx != fresh.approx[offset] {
                return Err(format!(
                    "level {level}: approx {} != {}",
                    rec.approx, fresh.approx[offset]
                ));
            }
            let bit = self.occupancy[offset / 64] >> (offset % 64) & 1 == 1;
            if bit != (rec.ss > 0) || rec.entries.is_empty() != (rec.ss == 0) {
                return Err(format!("level {level}: occupancy out of sync"));
            }
            for (pos, e) in rec.entries.iter().enumerate() {
                if e.sig >> 63 != 1 {
                    return Err(format!(
                        "level {level}: unnormalized significand {:#x}",
                        e.sig
                    ));
                }
                let expect = Location {
                    offset: offset as u16,
                    pos: pos as u32,
                };
                if self.location(e.index) != Some(expect) {
                    return Err(format!(
                        "index {}: locator does not point at its entry",
                        e.index
                    ));
                }
            }
        }
        if self.total_approx != fresh.total_approx {
            return Err(format!(
                "total approx {} != {}",
                self.total_approx, fresh.total_approx
            ));
        }
        if self.live != fresh.live {
            return Err(format!("live count {} != {}", self.live, fresh.live));
        }
        if self.top_level() != fresh.top || self.highest_nonempty() != self.top {
            return Err(format!(
                "top level {:?} != {:?}",
                self.top_level(),
                fresh.top
            ));
        }
        let located = self.locator.iter().filter(|l| l.is_some()).count() as u64;
        if located != self.live {
            return Err(format!(
                "{located} located indices but {} live entries",
                self.live
            ));
        }
        Ok(())
    }
}
