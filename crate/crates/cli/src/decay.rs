//! Weight-decay accuracy run.
//!
//! Item `i` starts at `(2 + i/10000)^1000` and is divided by its base once per
//! step, so the weights drift through hundreds of binary orders of magnitude
//! while their ratios change every step.

use ebus::rng::seeded;
use ebus::Ebus;
use serde::Serialize;

use crate::oracle::oracle_f64;
use crate::stats::{chi_square_test, js_divergence, normalize_counts, total_variation};
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecayConfig {
    pub n: usize,
    pub steps: usize,
    pub draws_per_step: u64,
    pub seed: u64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            n: 100,
            steps: 100,
            draws_per_step: 100_000,
            seed: 0x5eed,
        }
    }
}

impl DecayConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n < 2 || self.steps < 1 || self.draws_per_step < 1 {
            return Err(HarnessError::InvalidConfig(
                "decay needs n >= 2, steps >= 1, draws >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub step: usize,
    pub jsd: f64,
    pub chi2_p: f64,
    /// Total variation between the double-normalized and exact distributions.
    #[serde(skip)]
    pub tv_to_oracle: f64,
}

/// Base factor of item `i` (1-based).
pub fn decay_base(i: usize) -> f64 {
    2.0 + i as f64 / 10_000.0
}

/// `(2 + i/10000)^1000` for `i = 1..=n`.
pub fn initial_weights(n: usize) -> Vec<f64> {
    (1..=n).map(|i| decay_base(i).powf(1000.0)).collect()
}

/// `w_j / Σ w` in double precision.
pub fn double_normalized(ws: &[f64]) -> Vec<f64> {
    let total: f64 = ws.iter().sum();
    ws.iter().map(|w| w / total).collect()
}

pub fn run_decay(cfg: &DecayConfig) -> Result<Vec<DecayRow>, HarnessError> {
    run_decay_with(cfg, |_| {})
}

/// Like [`run_decay`], calling `on_row` as each step finishes.
pub fn run_decay_with(
    cfg: &DecayConfig,
    mut on_row: impl FnMut(&DecayRow),
) -> Result<Vec<DecayRow>, HarnessError> {
    cfg.validate()?;
    let mut rng = seeded(cfg.seed);
    let mut weights = initial_weights(cfg.n);
    let mut sampler = Ebus::from_weights(&weights)?;
    let mut rows = Vec::with_capacity(cfg.steps);
    let mut counts = vec![0u64; cfg.n];
    for step in 1..=cfg.steps {
        for (i, w) in weights.iter_mut().enumerate() {
            *w /= decay_base(i + 1);
            sampler.update(i, *w)?;
        }
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..cfg.draws_per_step {
            counts[sampler.sample(&mut rng)?] += 1;
        }
        let theory = double_normalized(&weights);
        let exact = oracle_f64(&weights)?;
        let row = DecayRow {
            step,
            jsd: js_divergence(&normalize_counts(&counts), &theory)?,
            chi2_p: chi_square_test(&counts, &exact)?.p_value,
            tv_to_oracle: total_variation(&theory, &exact),
        };
        on_row(&row);
        rows.push(row);
    }
    Ok(rows)
}
