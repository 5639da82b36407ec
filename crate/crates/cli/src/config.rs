//! The run configuration file (TOML) and flag overrides.
//!
//! Overrides are dotted keys (`bpr.dim`, `iterations`) applied to the parsed
//! file before it is deserialized, so a flag always wins over the file. The
//! seed falls back to `LOOPSIM_SEED` when neither sets it.

use std::path::{Path, PathBuf};

use loopsim_core::data::FilterOptions;
use loopsim_core::data::SplitRatios;
use loopsim_core::metrics::DeltaMode;
use loopsim_core::recommend::{BprConfig, ItemKnnConfig, ModelConfig, TrainingConfig};
use loopsim_core::sim::{PopularityMode, ReportOptions, SimulationConfig};
use loopsim_core::Parallelism;
use loopsim_core::choice::ChoiceConfig;
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

pub const SEED_ENV: &str = "LOOPSIM_SEED";
const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopularitySection {
    pub high_share: f64,
    pub low_share: f64,
}

impl Default for PopularitySection {
    fn default() -> Self {
        Self {
            high_share: 0.2,
            low_share: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSection {
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub min_users: usize,
    pub min_tracks: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        let d = ReportOptions::default();
        Self {
            min_users: d.min_users,
            min_tracks: d.min_tracks,
        }
    }
}

/// Everything a run reads from its config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: Option<u64>,
    pub iterations: u32,
    pub k: usize,
    pub alpha: f64,
    /// `pop`, `itemknn`, `bpr` or `fixture`.
    pub model: String,
    pub popularity_binning: PopularityMode,
    pub delta_mode: DeltaMode,
    pub checkpoint_every: Option<u32>,
    pub parallel: bool,
    pub warm_start: bool,
    pub split: SplitRatios,
    pub popularity: PopularitySection,
    pub ingest: FilterOptions,
    pub itemknn: ItemKnnConfig,
    pub bpr: BprConfig,
    pub training: TrainingConfig,
    pub fixture: Option<FixtureSection>,
    pub report: ReportSection,
    /// Input of `gen-synthetic`; ignored by the other commands.
    pub generator: Option<toml::Table>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimulationConfig::default();
        Self {
            dataset: None,
            output_dir: PathBuf::from("runs"),
            seed: None,
            iterations: sim.iterations,
            k: sim.choice.k,
            alpha: sim.choice.alpha,
            model: "pop".into(),
            popularity_binning: sim.popularity,
            delta_mode: DeltaMode::default(),
            checkpoint_every: None,
            parallel: true,
            warm_start: false,
            split: sim.split,
            popularity: PopularitySection::default(),
            ingest: FilterOptions::default(),
            itemknn: ItemKnnConfig::default(),
            bpr: BprConfig::default(),
            training: TrainingConfig::default(),
            fixture: None,
            report: ReportSection::default(),
            generator: None,
        }
    }
}

impl RunConfig {
    pub fn model_config(&self) -> Result<ModelConfig, Failure> {
        Ok(match self.model.to_ascii_lowercase().as_str() {
            "pop" => ModelConfig::Pop,
            "itemknn" => ModelConfig::ItemKnn(self.itemknn.clone()),
            "bpr" => ModelConfig::Bpr(self.bpr.clone()),
            "fixture" => {
                let Some(f) = &self.fixture else {
                    return Err(Failure::config("model = \"fixture\" needs a [fixture] path"));
                };
                ModelConfig::Fixture {
                    path: f.path.clone(),
                }
            }
            other => {
                return Err(Failure::config(format!(
                    "unknown model {other:?} (expected pop, itemknn, bpr or fixture)"
                )))
            }
        })
    }

    pub fn simulation(&self) -> Result<SimulationConfig, Failure> {
        let cfg = SimulationConfig {
            iterations: self.iterations,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            choice: ChoiceConfig {
                alpha: self.alpha,
                k: self.k,
            },
            split: self.split,
            model: self.model_config()?,
            training: self.training.clone(),
            popularity: self.popularity_binning,
            popularity_high_share: self.popularity.high_share,
            popularity_low_share: self.popularity.low_share,
            parallelism: if self.parallel {
                Parallelism::Parallel
            } else {
                Parallelism::Sequential
            },
            warm_start: self.warm_start,
            checkpoint_every: self.checkpoint_every,
        };
        cfg.validate().map_err(|e| Failure::config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn report_options(&self) -> ReportOptions {
        ReportOptions {
            min_users: self.report.min_users,
            min_tracks: self.report.min_tracks,
            delta_mode: self.delta_mode,
            popularity: self.popularity_binning,
        }
    }

    /// The effective configuration as written to `config.toml`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

/// Parses a flag value as a TOML literal, falling back to a plain string.
pub fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Parses `key=value`.
pub fn parse_assignment(s: &str) -> Result<(String, toml::Value), Failure> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Failure::config(format!("expected key=value, got {s:?}")))?;
    Ok((k.trim().to_string(), parse_value(v.trim())))
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), Failure> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| {
        Failure::config(format!("invalid override key {key:?}"))
    })?;
    let mut t = table;
    for p in parts {
        let entry = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| Failure::config(format!("{p:?} in {key:?} is not a table")))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

pub fn read_table(path: &Path) -> Result<toml::Table, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

/// Loads the config file (if any), applies overrides in order, then the
/// seed fallback.
pub fn load(
    path: Option<&Path>,
    overrides: &[(String, toml::Value)],
) -> Result<RunConfig, Failure> {
    let mut table = match path {
        Some(p) => read_table(p)?,
        None => toml::Table::new(),
    };
    for (k, v) in overrides {
        set_dotted(&mut table, k, v.clone())?;
    }
    if !table.contains_key("seed") {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            let seed: i64 = raw
                .trim()
                .parse()
                .map_err(|_| Failure::config(format!("{SEED_ENV}={raw:?} is not an integer")))?;
            table.insert("seed".into(), toml::Value::Integer(seed));
        }
    }
    let mut cfg: RunConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Failure::config(e.to_string()))?;
    cfg.seed.get_or_insert(DEFAULT_SEED);
    Ok(cfg)
}
