use thiserror::Error;

use crate::funcspec::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("horizon mismatch: need at least {needed}, got {got}")]
    HorizonMismatch { needed: u64, got: u64 },
    #[error("value {value} lies outside the horizon {horizon}")]
    OutOfHorizon { value: u64, horizon: u64 },
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("horizon exhausted at stage {stage} below cap {cap}: {demand}")]
    HorizonExhausted {
        stage: usize,
        cap: u32,
        demand: String,
    },
    #[error("no admissible target level below the horizon")]
    NoAdmissibleLevel,
    #[error("counting hypothesis fails at level {level}: |A_n| = {have}, need more than {bound}")]
    CountingHypothesis { level: u32, have: usize, bound: String },
    #[error("internal error: {0}")]
    Internal(String),
    #[error("pair ({i}, {j}) does not fit the codec range")]
    CodecRange { i: u64, j: u64 },
    #[error("window too large: max width {width} bits exceeds the limit {limit}")]
    WindowTooLarge { width: u64, limit: u64 },
    #[error("finite intersection property fails for generators {subfamily:?}")]
    FipFailure { subfamily: Vec<String> },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
