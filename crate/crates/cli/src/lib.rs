//! Experiment harness for the `ebus` sampler: an exact brute-force oracle,
//! statistics helpers, the weight-decay accuracy run, benchmark scenarios,
//! an adversarial update fuzzer, and a self-test.

pub mod bench;
pub mod decay;
pub mod fuzz;
pub mod oracle;
pub mod output;
pub mod selftest;
pub mod stats;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("negative or NaN entry")]
    NegativeEntry,
    #[error("weight {value} at index {index} is not a nonnegative finite number")]
    InvalidWeight { index: usize, value: f64 },
    #[error("all weights are zero")]
    AllZero,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Sampler(#[from] ebus::EbusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
