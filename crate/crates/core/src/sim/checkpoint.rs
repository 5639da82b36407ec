//! Checkpoints and resuming a run directory.
//!
//! A checkpoint after iteration `i` lives in `checkpoints/iter_<i>/` and
//! holds the dataset state (`interactions.tsv`, interaction order preserved),
//! the output files up to iteration `i`, and `state.json`, written last.
//! Every random stream is derived from the seed and the iteration number, so
//! the seed and iteration are the whole RNG state.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SimulationConfig;
use super::engine::Simulation;
use super::output::{copy_prefix, RunWriter, ACCEPTED_FILE};
use super::SimError;
use crate::data::{
    parse_interactions, write_interactions, FilterOptions, Interaction, InteractionDataset,
    Provenance,
};

pub const CHECKPOINTS_DIR: &str = "checkpoints";
const STATE_FILE: &str = "state.json";
const INTERACTIONS_FILE: &str = "interactions.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointState {
    /// Last completed iteration.
    pub iteration: u32,
    pub seed: u64,
    pub model: String,
    pub initial_interactions: usize,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub dir: PathBuf,
    pub state: CheckpointState,
    pub dataset: InteractionDataset,
}

pub fn checkpoint_dir(run_dir: &Path, iteration: u32) -> PathBuf {
    run_dir.join(CHECKPOINTS_DIR).join(format!("iter_{iteration:04}"))
}

/// Writes a checkpoint of `ds` after `state.iteration` into `run_dir`.
pub fn write_checkpoint(
    run_dir: &Path,
    ds: &InteractionDataset,
    state: &CheckpointState,
) -> Result<PathBuf, SimError> {
    let dir = checkpoint_dir(run_dir, state.iteration);
    std::fs::create_dir_all(&dir).map_err(|e| SimError::io(&dir, e))?;
    let path = dir.join(INTERACTIONS_FILE);
    let f = File::create(&path).map_err(|e| SimError::io(&path, e))?;
    write_interactions(ds, BufWriter::new(f)).map_err(|e| SimError::io(&path, e))?;
    copy_prefix(run_dir, &dir, state.iteration)?;

    let tmp = dir.join(format!("{STATE_FILE}.tmp"));
    let json = serde_json::to_string_pretty(state).expect("state serializes");
    std::fs::write(&tmp, json).map_err(|e| SimError::io(&tmp, e))?;
    let path = dir.join(STATE_FILE);
    std::fs::rename(&tmp, &path).map_err(|e| SimError::io(&path, e))?;
    log::info!("checkpoint written to {}", dir.display());
    Ok(dir)
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint, SimError> {
    let path = dir.join(STATE_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| SimError::io(&path, e))?;
    let state: CheckpointState = serde_json::from_str(&text)
        .map_err(|e| SimError::Checkpoint(format!("{}: {e}", path.display())))?;

    let path = dir.join(INTERACTIONS_FILE);
    let f = File::open(&path).map_err(|e| SimError::io(&path, e))?;
    let flat = parse_interactions(BufReader::new(f), &FilterOptions::none())?;

    // Provenance of the augmented tail comes from the accepted-items log.
    let path = dir.join(ACCEPTED_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| SimError::io(&path, e))?;
    let mut when: HashMap<(&str, &str), u32> = HashMap::new();
    for line in text.lines().skip(1) {
        let mut f = line.split('\t');
        if let (Some(it), Some(u), Some(t)) = (f.next(), f.next(), f.next()) {
            let it = it
                .parse()
                .map_err(|_| SimError::Checkpoint(format!("bad line in {ACCEPTED_FILE}: {line:?}")))?;
            when.insert((u, t), it);
        }
    }
    let n0 = state.initial_interactions;
    if flat.num_interactions() < n0 {
        return Err(SimError::Checkpoint(format!(
            "{} has fewer interactions than the initial dataset",
            INTERACTIONS_FILE
        )));
    }
    let interactions = flat
        .interactions()
        .iter()
        .enumerate()
        .map(|(i, it)| {
            if i < n0 {
                return Ok(*it);
            }
            let key = (flat.user(it.user).id.as_str(), flat.track(it.track).id.as_str());
            let iteration = when.get(&key).copied().ok_or_else(|| {
                SimError::Checkpoint(format!("no accepted-item entry for {key:?}"))
            })?;
            Ok(Interaction {
                provenance: Provenance::Augmented(iteration),
                ..*it
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let dataset =
        InteractionDataset::from_parts(flat.users().to_vec(), flat.tracks().to_vec(), interactions)?;
    Ok(Checkpoint {
        dir: dir.to_path_buf(),
        state,
        dataset,
    })
}

/// The checkpoint with the highest iteration in a run directory.
pub fn latest_checkpoint(run_dir: &Path) -> Result<Option<PathBuf>, SimError> {
    let root = run_dir.join(CHECKPOINTS_DIR);
    if !root.is_dir() {
        return Ok(None);
    }
    let mut best: Option<(u32, PathBuf)> = None;
    for entry in std::fs::read_dir(&root).map_err(|e| SimError::io(&root, e))? {
        let entry = entry.map_err(|e| SimError::io(&root, e))?;
        let name = entry.file_name();
        let Some(it) = name
            .to_str()
            .and_then(|n| n.strip_prefix("iter_"))
            .and_then(|n| n.parse::<u32>().ok())
        else {
            continue;
        };
        if entry.path().join(STATE_FILE).is_file() && best.as_ref().is_none_or(|(b, _)| it > *b) {
            best = Some((it, entry.path()));
        }
    }
    Ok(best.map(|(_, p)| p))
}

/// Fresh run writing all outputs into `run_dir`. Returns the final dataset.
pub fn run_to_dir(
    dataset: &InteractionDataset,
    config: SimulationConfig,
    run_dir: &Path,
) -> Result<InteractionDataset, SimError> {
    let sim = Simulation::new(dataset, config)?;
    let mut writer = RunWriter::create(
        run_dir,
        sim.config().model.label(),
        sim.config().seed,
        sim.initial(),
    )?;
    sim.run(&mut writer)
}

/// Continues a run from a checkpoint (the latest one in `run_dir` unless
/// given). Output files are rolled back to the checkpoint first, so the
/// finished directory matches an uninterrupted run.
pub fn resume_in_dir(
    run_dir: &Path,
    checkpoint: Option<&Path>,
    config: SimulationConfig,
) -> Result<InteractionDataset, SimError> {
    if config.warm_start {
        return Err(SimError::Config(
            "resuming is not supported with warm_start (model parameters are not checkpointed)"
                .into(),
        ));
    }
    let dir = match checkpoint {
        Some(p) => p.to_path_buf(),
        None => latest_checkpoint(run_dir)?.ok_or_else(|| {
            SimError::Checkpoint(format!("no checkpoint found in {}", run_dir.display()))
        })?,
    };
    let ckpt = load_checkpoint(&dir)?;
    if ckpt.state.seed != config.seed || ckpt.state.model != config.model.label() {
        return Err(SimError::Checkpoint(format!(
            "checkpoint was written by seed {} / model {}, config has seed {} / model {}",
            ckpt.state.seed,
            ckpt.state.model,
            config.seed,
            config.model.label()
        )));
    }
    copy_prefix(&ckpt.dir, run_dir, ckpt.state.iteration)?;
    let sim = Simulation::new(&ckpt.dataset, config)?;
    if sim.initial().num_interactions() != ckpt.state.initial_interactions {
        return Err(SimError::Checkpoint(
            "checkpoint dataset does not match its recorded initial size".into(),
        ));
    }
    let mut writer = RunWriter::append_to(
        run_dir,
        &ckpt.state.model,
        ckpt.state.seed,
        ckpt.state.initial_interactions,
    )?;
    log::info!("resuming after iteration {}", ckpt.state.iteration);
    sim.run_from(ckpt.dataset, ckpt.state.iteration + 1, &mut writer)
}
