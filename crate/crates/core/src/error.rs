use thiserror::Error;

use crate::spectrum::FrequencyPair;

/// Errors raised by field construction, geometry and the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mean-zero violated: nonzero coefficient at (0,0)")]
    MeanZero,
    #[error("coefficients at {k} and its negation are not complex conjugates")]
    NonConjugate { k: FrequencyPair },
    #[error("frequency {k} given more than once")]
    DuplicateFrequency { k: FrequencyPair },
    #[error("non-finite coefficient at {k}")]
    NonFinite { k: FrequencyPair },
    #[error("malformed field document: {0}")]
    Malformed(String),
    #[error("direction (0,0) does not define a geodesic")]
    ZeroDirection,
    #[error("direction ({a},{b}) is not primitive")]
    NotPrimitive { a: i64, b: i64 },
    #[error("grid size {grid} below Nyquist margin {required}")]
    GridTooCoarse { grid: usize, required: usize },
    #[error("derivative order must be at least {min}, got {s}")]
    OrderTooLow { s: u32, min: u32 },
    #[error("field is identically zero")]
    EmptyField,
    #[error("quadrature with {m} nodes would alias; need more than {required}")]
    Aliasing { m: usize, required: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
