//! Adversarial update/sample fuzzer with exact safety and repair checks.
//!
//! Weights cluster around a center exponent that random-walks, with a dense
//! band just above it so several buckets approach 2^64 at once. The mix also
//! has rare extremes (1e±300, f64::MAX), subnormals, exact repeats that pile
//! onto one level, and purges of the top level. Purges and downward center
//! moves make the mass collapse, which forces lazy increases on the next draw.

use ebus::level_store::LevelStore;
use ebus::rng::{seeded, RngSource};
use ebus::{Ebus, PolicyParams, ShiftEvent, ShiftKind};

#[derive(Debug, Clone, Copy)]
pub struct FuzzConfig {
    pub seed: u64,
    /// Public operations (updates and samples) to perform.
    pub ops: usize,
    /// Index space for updates.
    pub max_index: usize,
    pub params: PolicyParams,
    /// Run the full entry-level consistency check every this many ops (0 = never).
    pub full_check_every: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            ops: 100_000,
            max_index: 256,
            params: PolicyParams::default(),
            full_check_every: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FuzzReport {
    pub updates: u64,
    pub samples: u64,
    /// Shift changes by kind: init, level overflow, global overflow, lazy increase.
    pub events: [u64; 4],
    pub max_window: usize,
    pub min_after_lazy: Option<u128>,
    pub max_after_lazy: Option<u128>,
    pub min_after_eager: Option<u128>,
    pub max_total: u128,
    pub repair_checks: u64,
    pub full_checks: u64,
    pub violations: Vec<String>,
}

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn flag(&mut self, msg: String) {
        if self.violations.len() < 20 {
            self.violations.push(msg);
        }
    }
}

/// Double with unbiased binary exponent `e` and a random significand.
/// Exponents below the normal range give subnormals.
pub fn weight_with_exponent<R: RngSource + ?Sized>(rng: &mut R, e: i32) -> f64 {
    let e = e.clamp(-1074, 1023);
    if e >= -1022 {
        f64::from_bits(((e + 1023) as u64) << 52 | rng.uniform_bits(52))
    } else {
        let width = (e + 1074) as u32;
        f64::from_bits(1u64 << width | rng.uniform_bits(width))
    }
}

/// Weight whose exponent is uniform over `lo..lo + width`.
pub fn weight_in_band<R: RngSource + ?Sized>(rng: &mut R, lo: i32, width: u32) -> f64 {
    let e = lo + rng.uniform_below(u64::from(width)) as i32;
    weight_with_exponent(rng, e)
}

fn adversarial_weight<R: RngSource + ?Sized>(rng: &mut R, center: i32, last: f64) -> f64 {
    match rng.uniform_below(500) {
        0..=99 => 0.0,
        100..=103 => [1e300, 1e-300, f64::MAX, f64::MIN_POSITIVE][rng.uniform_below(4) as usize],
        104..=124 => f64::from_bits(1 + rng.uniform_below((1 << 52) - 1)),
        125..=174 => last,
        175..=349 => weight_in_band(rng, center - 6, 22),
        350..=449 => weight_in_band(rng, center + 10, 6),
        _ => weight_in_band(rng, -1074, (center + 1075).clamp(1, 2098) as u32),
    }
}

/// Every bucket and the total match a from-scratch recomputation.
pub fn check_summaries(store: &LevelStore) -> Result<(), String> {
    let fresh = store.recompute_summary();
    for (offset, rec) in store.levels().iter().enumerate() {
        if rec.ss() != fresh.ss[offset] || rec.approx() != fresh.approx[offset] {
            return Err(format!(
                "offset {offset}: maintained ({}, {}) vs recomputed ({}, {})",
                rec.ss(),
                rec.approx(),
                fresh.ss[offset],
                fresh.approx[offset]
            ));
        }
    }
    if store.total_approx() != fresh.total_approx {
        return Err(format!(
            "total {} vs recomputed {}",
            store.total_approx(),
            fresh.total_approx
        ));
    }
    Ok(())
}

fn check_event(report: &mut FuzzReport, params: &PolicyParams, e: &ShiftEvent, op: usize) {
    report.events[e.kind as usize] += 1;
    report.max_window = report.max_window.max(e.window);
    if e.window > 128 {
        report.flag(format!("op {op}: repair window {} > 128: {e:?}", e.window));
    }
    let a = e.total_after;
    match e.kind {
        ShiftKind::LazyIncrease => {
            report.min_after_lazy = Some(report.min_after_lazy.map_or(a, |m| m.min(a)));
            report.max_after_lazy = Some(report.max_after_lazy.map_or(a, |m| m.max(a)));
            let l = params.strong_exp;
            if a < 1 << l || a >= 74u128 << l {
                report.flag(format!(
                    "op {op}: lazy increase left A = {a} outside [2^{l}, 74*2^{l})"
                ));
            }
        }
        ShiftKind::LevelOverflow | ShiftKind::GlobalOverflow | ShiftKind::Init => {
            report.min_after_eager = Some(report.min_after_eager.map_or(a, |m| m.min(a)));
            if a < 1 << params.good_exp {
                report.flag(format!(
                    "op {op}: {:?} left A = {a} below 2^{}",
                    e.kind, params.good_exp
                ));
            }
        }
    }
}

pub fn run_fuzz(cfg: &FuzzConfig) -> FuzzReport {
    let mut report = FuzzReport::default();
    let mut rng = seeded(cfg.seed);
    let mut s = match Ebus::with_params(cfg.max_index, cfg.params) {
        Ok(s) => s,
        Err(e) => {
            report.flag(format!("invalid params: {e}"));
            return report;
        }
    };
    s.record_shifts(true);
    let mut last = 1.0;
    let mut center = 0;
    for op in 0..cfg.ops {
        // The cluster center random-walks. Upward steps overflow buckets;
        // downward steps let the old mass drain through overwrites and
        // purges, so the next draw shifts up.
        if rng.uniform_below(200) == 0 {
            center = (center - 40 + rng.uniform_below(81) as i32).clamp(-1070, 1000);
        }
        let roll = rng.uniform_below(1000);
        let result = if roll < 250 && !s.is_empty() {
            report.samples += 1;
            s.sample(&mut rng).map(|_| ())
        } else if roll < 253 && !s.is_empty() {
            // Purge the top level.
            let top = s.store().top_offset().expect("nonempty");
            let victims: Vec<usize> = s
                .store()
                .level(top)
                .entries()
                .iter()
                .map(|e| e.index)
                .collect();
            report.updates += victims.len() as u64;
            victims.into_iter().try_for_each(|i| s.remove(i))
        } else {
            report.updates += 1;
            let index = rng.uniform_below(cfg.max_index as u64) as usize;
            let w = adversarial_weight(&mut rng, center, last);
            if w > 0.0 {
                last = w;
            }
            s.update(index, w)
        };
        if let Err(e) = result {
            report.flag(format!("op {op}: operation failed: {e}"));
            break;
        }
        let total = s.total_approx();
        report.max_total = report.max_total.max(total);
        if total >= 1 << 64 {
            report.flag(format!("op {op}: A = {total} >= 2^64"));
        }
        let events = s.take_shift_events();
        for e in &events {
            check_event(&mut report, &cfg.params, e, op);
        }
        if !events.is_empty() {
            report.repair_checks += 1;
            if let Err(m) = check_summaries(s.store()) {
                report.flag(format!("op {op}: post-repair summary mismatch: {m}"));
            }
        }
        if cfg.full_check_every > 0 && op % cfg.full_check_every == 0 {
            report.full_checks += 1;
            if let Err(m) = s.check_invariants() {
                report.flag(format!("op {op}: {m}"));
            }
        }
    }
    if let Err(m) = s.check_invariants() {
        report.flag(format!("final state: {m}"));
    }
    report.full_checks += 1;
    report
}
