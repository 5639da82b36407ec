use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::{RecommendError, Recommender};
use crate::data::{InteractionDataset, UserIdx};

/// Externally computed scores read from a `user_id<TAB>track_id<TAB>score`
/// file. Pairs missing from the file score negative infinity.
///
/// Lets models trained outside this crate take part in the loop. The scores
/// do not change between iterations.
#[derive(Debug, Clone)]
pub struct FixtureModel {
    n_items: usize,
    scores: HashMap<u32, Vec<(u32, f64)>>,
}

impl FixtureModel {
    pub fn load(path: &Path, ds: &InteractionDataset) -> Result<Self, RecommendError> {
        let file = File::open(path).map_err(|source| RecommendError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(BufReader::new(file), ds)
    }

    /// Rows naming users or tracks absent from `ds` are skipped. An optional
    /// `user_id<TAB>track_id<TAB>score` header is accepted.
    pub fn parse<R: BufRead>(reader: R, ds: &InteractionDataset) -> Result<Self, RecommendError> {
        let mut scores: HashMap<u32, Vec<(u32, f64)>> = HashMap::new();
        let mut skipped = 0usize;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| RecommendError::Io {
                path: "<fixture>".into(),
                source,
            })?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() || (line_no == 1 && line.starts_with("user_id\t")) {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [user, track, score] = fields[..] else {
                return Err(RecommendError::Fixture {
                    line: line_no,
                    message: format!("expected 3 fields, found {}", fields.len()),
                });
            };
            let score: f64 = score.parse().map_err(|_| RecommendError::Fixture {
                line: line_no,
                message: format!("invalid score {score:?}"),
            })?;
            match (ds.user_index(user), ds.track_index(track)) {
                (Some(u), Some(t)) => scores.entry(u.0).or_default().push((t.0, score)),
                _ => skipped += 1,
            }
        }
        if skipped > 0 {
            log::warn!("fixture scores: skipped {skipped} rows with unknown users or tracks");
        }
        Ok(Self {
            n_items: ds.num_tracks(),
            scores,
        })
    }
}

impl Recommender for FixtureModel {
    fn name(&self) -> &str {
        "Fixture"
    }

    fn num_items(&self) -> usize {
        self.n_items
    }

    fn score_into(&self, user: UserIdx, out: &mut [f64]) -> Result<(), RecommendError> {
        let rows = self
            .scores
            .get(&user.0)
            .ok_or(RecommendError::UnknownUser(user.0))?;
        out.iter_mut().for_each(|o| *o = f64::NEG_INFINITY);
        for &(t, s) in rows {
            out[t as usize] = s;
        }
        Ok(())
    }
}
