//! Evaluation quantities: country and popularity distributions, Jensen-Shannon
//! miscalibration, NDCG, deltas and paired significance tests.

mod distribution;
mod ranking;
mod stats;

pub use distribution::{
    country_distribution, country_proportions, jsd, popularity_binning, popularity_distribution,
    AttributeDistribution, PopularityBin, PopularityBinning, COUNTRY_BINS, POPULARITY_BINS,
};
pub use ranking::ndcg_at_k;
pub use stats::{
    delta_percent, independent_t_test, paired_t_test,
    student_t_cdf, DeltaMode, TTest, BONFERRONI_ALPHA,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("proportion of an empty item list is undefined")]
    EmptyItems,
    #[error("distributions have different bins: {0:?} vs {1:?}")]
    BinMismatch(Vec<String>, Vec<String>),
    #[error("delta relative to a zero baseline is undefined")]
    ZeroBaseline,
    #[error("t-test needs paired samples of equal length >= 2 (got {before} and {after})")]
    SampleSize { before: usize, after: usize },
}
