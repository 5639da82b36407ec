//! The feedback loop: split, fit, recommend, accept, augment, measure.

mod checkpoint;
mod config;
mod engine;
mod output;
mod record;
mod report;

pub use checkpoint::{
    checkpoint_dir, latest_checkpoint, load_checkpoint, resume_in_dir, run_to_dir,
    write_checkpoint, Checkpoint, CheckpointState, CHECKPOINTS_DIR,
};
pub use config::{PopularityMode, SimulationConfig};
pub use engine::{run_simulation, IterationOutcome, MemorySink, NullSink, RecordSink, Simulation};
pub use output::{
    format_accepted, format_metrics_group, format_user_rows, read_metrics_csv, read_records,
    MetricsRow, MetricsTable, RunWriter, ACCEPTED_FILE, ACCEPTED_HEADER, METRICS_FILE,
    METRICS_HEADER, USER_METRICS_FILE, USER_METRICS_HEADER,
};
pub use record::{metric, IterationRecord, MetricMeans, UserRecord};
pub use report::{final_report, DeltaRow, JsdRow, Report, ReportOptions};

use thiserror::Error;

use crate::choice::ChoiceError;
use crate::data::DataError;
use crate::metrics::MetricsError;
use crate::recommend::RecommendError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("iteration {iteration}: training diverged at epoch {epoch}")]
    TrainingDiverged { iteration: u32, epoch: usize },
    #[error("iteration {iteration}: {source}")]
    Recommend {
        iteration: u32,
        #[source]
        source: RecommendError,
    },
    #[error(transparent)]
    Choice(#[from] ChoiceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("metrics CSV is truncated or malformed at line {line}: {reason}; last good iteration: {}", .last_good.map_or("none".to_string(), |i| i.to_string()))]
    TruncatedMetrics {
        line: usize,
        reason: String,
        last_good: Option<u32>,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn recommend(iteration: u32, source: RecommendError) -> Self {
        match source {
            RecommendError::TrainingDiverged { epoch } => {
                SimError::TrainingDiverged { iteration, epoch }
            }
            source => SimError::Recommend { iteration, source },
        }
    }
}
