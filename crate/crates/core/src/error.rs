use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EbusError {
    #[error("weight at index {index} is negative, NaN or infinite: {value}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("{0} is not a positive finite weight")]
    NotPositive(f64),

    #[error("level {0} is outside the binary64 level domain")]
    LevelOutOfRange(i32),

    #[error("significand {sig:#x} at level {level} is not an exactly representable double")]
    NotRepresentable { level: i32, sig: u64 },

    #[error("index {index} is out of range for capacity {capacity}")]
    IndexOutOfRange { index: usize, capacity: usize },

    #[error("index {0} is already present")]
    DuplicateIndex(usize),

    #[error("index {0} is not present")]
    AbsentIndex(usize),

    #[error("sampler holds no positive weight")]
    EmptySampler,

    #[error("invalid shift-policy parameters: {0}")]
    InvalidParams(String),

    #[error("bernoulli numerator exceeds denominator")]
    ProbabilityAboveOne,
}
