//! Self-test suites: incremental state against recomputation, shift-policy
//! safety under adversarial fuzz, post-repair equivalence with forced lazy
//! increases, and goodness of fit against the exact oracle.

use std::fmt;

use ebus::rng::{seeded, DefaultRng, RngSource};
use ebus::{Ebus, PolicyParams};

use crate::fuzz::{run_fuzz, weight_in_band, FuzzConfig, FuzzReport};
use crate::oracle::oracle_f64;
use crate::stats::chi_square_test;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelftestConfig {
    pub seed: u64,
    pub equivalence_updates: usize,
    pub fuzz_ops: usize,
    pub stat_sets: usize,
    pub stat_draws: u64,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            equivalence_updates: 100_000,
            fuzz_ops: 1_000_000,
            stat_sets: 8,
            stat_draws: 200_000,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: u64,
    pub failures: Vec<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            ..Default::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.failures.len() < 20 {
            self.failures.push(msg());
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    pub suites: Vec<SuiteResult>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            let status = if s.passed() { "PASS" } else { "FAIL" };
            writeln!(
                f,
                "{status} {:<22} checks={} failures={}",
                s.name,
                s.checks,
                s.failures.len()
            )?;
            for m in &s.failures {
                writeln!(f, "    {m}")?;
            }
        }
        let status = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{status} selftest")
    }
}

/// Mixed-magnitude weight including zeros and subnormals.
pub fn mixed_weight(rng: &mut DefaultRng) -> f64 {
    match rng.uniform_below(8) {
        0 => 0.0,
        1 => f64::from_bits(1 + rng.uniform_below((1 << 52) - 1)),
        2 => [1e300, 1e-300, 1.0][rng.uniform_below(3) as usize],
        _ => weight_in_band(rng, -1074, 2098),
    }
}

/// Random update mix on a mirror vector, then maintained state against a
/// full recomputation and against a sampler rebuilt from scratch.
pub fn equivalence_suite(seed: u64, updates: usize) -> SuiteResult {
    let mut r = SuiteResult::new("oracle-equivalence");
    let mut rng = seeded(seed);
    let n = 200;
    let mut mirror = vec![0.0f64; n];
    let mut s = Ebus::new(n);
    for step in 0..updates {
        let i = rng.uniform_below(n as u64) as usize;
        // Modify an existing weight, delete it, or insert into an empty slot.
        let w = if mirror[i] > 0.0 && rng.uniform_below(3) == 0 {
            0.0
        } else {
            mixed_weight(&mut rng)
        };
        mirror[i] = w;
        if let Err(e) = s.update(i, w) {
            r.check(false, || format!("update {step}: {e}"));
            return r;
        }
        if step % 1000 == 999 || step + 1 == updates {
            r.check(s.check_invariants().is_ok(), || {
                format!("update {step}: {}", s.check_invariants().unwrap_err())
            });
            let scratch = Ebus::from_weights(&mirror).expect("mirror weights are valid");
            let same_sums = s
                .store()
                .levels()
                .iter()
                .zip(scratch.store().levels())
                .all(|(a, b)| a.ss() == b.ss() && a.entries().len() == b.entries().len());
            r.check(same_sums, || {
                format!("update {step}: level sums differ from scratch build")
            });
            r.check(
                s.live_count() == scratch.live_count()
                    && s.store().top_level() == scratch.store().top_level(),
                || format!("update {step}: live count or top level differs from scratch build"),
            );
            r.check((0..n).all(|j| s.weight(j) == mirror[j]), || {
                format!("update {step}: stored weights differ from mirror")
            });
        }
    }
    r
}

fn fuzz_suite(name: &'static str, cfg: FuzzConfig) -> (SuiteResult, FuzzReport) {
    let report = run_fuzz(&cfg);
    let mut r = SuiteResult::new(name);
    r.checks = report.updates + report.samples + report.repair_checks + report.full_checks;
    r.failures = report.violations.clone();
    (r, report)
}

/// Tiny-K parameters, so lazy increases and eager decreases are frequent.
pub fn small_params() -> PolicyParams {
    PolicyParams {
        initial_exp: 12,
        level_reset_exp: 16,
        good_exp: 12,
        strong_exp: 14,
        global_step: 2,
    }
}

/// Chi-square of sampler draws against the exact oracle on random weight
/// sets. One low p-value is tolerated across the sets.
pub fn statistical_suite(seed: u64, sets: usize, draws: u64) -> SuiteResult {
    let mut r = SuiteResult::new("statistical");
    let mut rng = seeded(seed);
    let mut low = Vec::new();
    for set in 0..sets {
        let n = 2 + rng.uniform_below(31) as usize;
        let base = -1074 + rng.uniform_below(2090) as i32;
        let ws: Vec<f64> = (0..n).map(|_| weight_in_band(&mut rng, base, 8)).collect();
        let probs = oracle_f64(&ws).expect("positive weights");
        let mut s = Ebus::from_weights(&ws).expect("valid weights");
        let mut counts = vec![0u64; n];
        for _ in 0..draws {
            counts[s.sample(&mut rng).expect("nonempty")] += 1;
        }
        let p = chi_square_test(&counts, &probs)
            .expect("matching lengths")
            .p_value;
        if p <= 1e-4 {
            low.push(format!("set {set}: p = {p:.3e}"));
        }
        r.checks += 1;
    }
    if low.len() > 1 {
        r.failures = low;
    }
    r
}

pub fn run_selftest(cfg: &SelftestConfig) -> SelftestReport {
    let mut suites = vec![equivalence_suite(cfg.seed, cfg.equivalence_updates)];
    let (safety, _) = fuzz_suite(
        "safety-invariant",
        FuzzConfig {
            seed: cfg.seed,
            ops: cfg.fuzz_ops,
            ..FuzzConfig::default()
        },
    );
    suites.push(safety);
    let (repair, report) = fuzz_suite(
        "repair-equivalence",
        FuzzConfig {
            seed: cfg.seed ^ 0x9e37_79b9_7f4a_7c15,
            ops: cfg.fuzz_ops / 4,
            params: small_params(),
            full_check_every: 1000,
            ..FuzzConfig::default()
        },
    );
    let mut repair = repair;
    repair.check(report.events[3] > 0, || {
        "no lazy increase was forced".into()
    });
    suites.push(repair);
    suites.push(statistical_suite(cfg.seed, cfg.stat_sets, cfg.stat_draws));
    SelftestReport { suites }
}
