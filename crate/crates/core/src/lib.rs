//! Feedback-loop simulation for music recommenders.
//!
//! The loop repeatedly splits an implicit-feedback dataset, trains a
//! recommender, lets every user accept one of their top-k recommendations
//! with a rank-decaying probability, and appends the accepted items to the
//! user profiles. Each iteration is summarised by country (local / US /
//! other) and popularity (high / mid / low) representation metrics.
//!
//! Modules:
//!
//! - [`data`]: datasets, ingestion, filtering, splits and synthetic generators.
//! - [`recommend`]: the recommender contract plus Pop, ItemKNN, BPR and a
//!   file-backed fixture model.
//! - [`choice`]: the rank-based acceptance model.
//! - [`metrics`]: proportions, Jensen-Shannon miscalibration, NDCG and
//!   paired significance tests.
//! - [`sim`]: the loop itself, its CSV outputs, checkpoints and reports.

pub mod choice;
pub mod data;
pub mod metrics;
pub mod par;
pub mod recommend;
pub mod rng;
pub mod sim;

pub use data::{CountryLabel, InteractionDataset, TrackIdx, UserIdx};
pub use par::Parallelism;
