//! Error-to-exit-code mapping.
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O or other runtime failure |
//! | 2 | invalid configuration or usage |
//! | 3 | invalid or unusable data (parse errors, infeasible generator spec, truncated metrics) |
//! | 4 | model training diverged |

use std::fmt;

use loopsim_core::data::DataError;
use loopsim_core::recommend::RecommendError;
use loopsim_core::sim::SimError;

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_DIVERGED: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self::new(EXIT_IO, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn data_code(e: &DataError) -> u8 {
    match e {
        DataError::Config(_) => EXIT_CONFIG,
        DataError::Io { .. } => EXIT_IO,
        _ => EXIT_DATA,
    }
}

fn recommend_code(e: &RecommendError) -> u8 {
    match e {
        RecommendError::TrainingDiverged { .. } => EXIT_DIVERGED,
        RecommendError::Config(_) | RecommendError::InvalidK => EXIT_CONFIG,
        RecommendError::Io { .. } => EXIT_IO,
        _ => EXIT_DATA,
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::new(data_code(&e), e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = match &e {
            SimError::Config(_) | SimError::Choice(_) => EXIT_CONFIG,
            SimError::Data(d) => data_code(d),
            SimError::TrainingDiverged { .. } => EXIT_DIVERGED,
            SimError::Recommend { source, .. } => recommend_code(source),
            SimError::Io { .. } => EXIT_IO,
            SimError::Metrics(_) | SimError::Checkpoint(_) | SimError::TruncatedMetrics { .. } => {
                EXIT_DATA
            }
        };
        Failure::new(code, e.to_string())
    }
}
