//! Timing scenarios of increasing dynamicity.
//!
//! Weights are absolute values of standard normal draws. Each timed run
//! builds a fresh sampler outside the timed region; one untimed warmup run
//! precedes the repeats at each size.

use std::fmt;
use std::hint::black_box;
use std::time::Instant;

use ebus::rng::{seeded, DefaultRng, RngSource};
use ebus::Ebus;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::HarnessError;

/// Samples per timed run in the static scenario.
pub const STATIC_SAMPLES: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Build once, then time pure sampling.
    Static,
    /// One sample plus one random-index weight update per iteration.
    Fixed,
    /// One sample plus one deletion per iteration, down to size/10.
    Decreasing,
    /// One sample plus one insertion per iteration, up to size*10.
    Increasing,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Static,
        Scenario::Fixed,
        Scenario::Decreasing,
        Scenario::Increasing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Static => "static",
            Scenario::Fixed => "fixed",
            Scenario::Decreasing => "decreasing",
            Scenario::Increasing => "increasing",
        }
    }

    /// Timed iterations for one run at `size`.
    pub fn iterations(self, size: usize) -> u64 {
        let size = size as u64;
        match self {
            Scenario::Static => STATIC_SAMPLES,
            Scenario::Fixed => size,
            Scenario::Decreasing => size - size / 10,
            Scenario::Increasing => 9 * size,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub scenario: Scenario,
    pub sizes: Vec<usize>,
    /// Timed runs per size; `None` uses 50 below 10^6 items and 5 from there on.
    pub repeats: Option<usize>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Static,
            sizes: vec![1_000, 10_000, 100_000, 1_000_000],
            repeats: None,
            seed: 0x5eed,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.sizes.is_empty() || self.sizes.iter().any(|&s| s < 1) {
            return Err(HarnessError::InvalidConfig("sizes must be >= 1".into()));
        }
        if self.repeats == Some(0) {
            return Err(HarnessError::InvalidConfig("repeats must be >= 1".into()));
        }
        Ok(())
    }

    pub fn repeats_for(&self, size: usize) -> usize {
        self.repeats
            .unwrap_or(if size < 1_000_000 { 50 } else { 5 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub scenario: Scenario,
    pub size: usize,
    pub median_ns_per_iter: f64,
}

/// One timed run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioRun {
    pub iterations: u64,
    pub elapsed_ns: u128,
    /// Live items when the timed loop ended.
    pub final_live: u64,
}

impl ScenarioRun {
    pub fn ns_per_iter(&self) -> f64 {
        self.elapsed_ns as f64 / self.iterations.max(1) as f64
    }
}

/// `|N(0, 1)|`, redrawn on the measure-zero event of an exact zero.
pub fn half_normal(rng: &mut DefaultRng) -> f64 {
    loop {
        let v: f64 = rng.sample::<f64, _>(StandardNormal).abs();
        if v > 0.0 {
            return v;
        }
    }
}

pub fn run_scenario_once(
    scenario: Scenario,
    size: usize,
    rng: &mut DefaultRng,
) -> Result<ScenarioRun, HarnessError> {
    let weights: Vec<f64> = (0..size).map(|_| half_normal(rng)).collect();
    let mut s = Ebus::from_weights(&weights)?;
    let iterations = scenario.iterations(size);
    let elapsed_ns = match scenario {
        Scenario::Static => {
            let start = Instant::now();
            for _ in 0..iterations {
                black_box(s.sample(rng)?);
            }
            start.elapsed().as_nanos()
        }
        Scenario::Fixed => {
            let updates: Vec<(usize, f64)> = (0..iterations)
                .map(|_| (rng.uniform_below(size as u64) as usize, half_normal(rng)))
                .collect();
            let start = Instant::now();
            for &(i, w) in &updates {
                black_box(s.sample(rng)?);
                s.update(i, w)?;
            }
            start.elapsed().as_nanos()
        }
        Scenario::Decreasing => {
            let mut live: Vec<usize> = (0..size).collect();
            let start = Instant::now();
            for _ in 0..iterations {
                black_box(s.sample(rng)?);
                let k = rng.uniform_below(live.len() as u64) as usize;
                s.remove(live.swap_remove(k))?;
            }
            start.elapsed().as_nanos()
        }
        Scenario::Increasing => {
            let fresh: Vec<f64> = (0..iterations).map(|_| half_normal(rng)).collect();
            let start = Instant::now();
            for &w in &fresh {
                black_box(s.sample(rng)?);
                s.push(w)?;
            }
            start.elapsed().as_nanos()
        }
    };
    Ok(ScenarioRun {
        iterations,
        elapsed_ns,
        final_live: s.live_count(),
    })
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, HarnessError> {
    run_bench_with(cfg, |_| {})
}

/// Like [`run_bench`], calling `on_row` as each size finishes.
pub fn run_bench_with(
    cfg: &BenchConfig,
    mut on_row: impl FnMut(&BenchRow),
) -> Result<Vec<BenchRow>, HarnessError> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for (k, &size) in cfg.sizes.iter().enumerate() {
        let mut rng = seeded(cfg.seed.wrapping_add(k as u64));
        run_scenario_once(cfg.scenario, size, &mut rng)?;
        let mut per_iter = (0..cfg.repeats_for(size))
            .map(|_| run_scenario_once(cfg.scenario, size, &mut rng).map(|r| r.ns_per_iter()))
            .collect::<Result<Vec<_>, _>>()?;
        let row = BenchRow {
            scenario: cfg.scenario,
            size,
            median_ns_per_iter: median(&mut per_iter),
        };
        on_row(&row);
        rows.push(row);
    }
    Ok(rows)
}
