//! Exact dynamic discrete sampling over IEEE-754 binary64 weights.
//!
//! [`Sampler`] stores a weight per index and returns index `j` with
//! probability exactly `w_j / Σ w` for the weights as represented in
//! floating point, in O(1) expected time per draw and O(1) amortized time
//! per update. Weights are grouped by binary exponent; each level keeps an
//! exact 128-bit significand sum next to a 64-bit approximate bucket, and a
//! global power-of-two shift keeps the buckets in one machine word.
//!
//! ```
//! use ebus::{rng, Ebus};
//!
//! let mut s = Ebus::from_weights(&[1.0, 1.0, 2.0]).unwrap();
//! s.update(0, 0.0).unwrap();
//! let mut rng = rng::seeded(7);
//! let j = s.sample(&mut rng).unwrap();
//! assert!(j == 1 || j == 2);
//! ```

pub mod bulk;
pub mod error;
pub mod float_decode;
pub mod level_store;
pub mod rng;
pub mod sampler;
pub mod shift_policy;
pub mod wide;

pub use bulk::LevelCounts;
pub use error::EbusError;
pub use float_decode::{classify, decode, encode, DecodedWeight, Weight, WeightClass};
pub use level_store::LevelStore;
pub use rng::{DefaultRng, RngSource};
pub use sampler::{Sampler, SamplerStats};
pub use shift_policy::{PolicyParams, ShiftChange, ShiftEvent, ShiftKind};
pub use wide::WideInt;

/// Sampler over `f64` weights.
pub type Ebus = Sampler<f64>;
/// Sampler over `f32` weights, decoded exactly into the binary64 level domain.
pub type Ebus32 = Sampler<f32>;
