//! Run directory files.
//!
//! * `metrics.csv`: long format `iteration,scope,model,metric,country,value`,
//!   with population-level and per-country means. Every iteration group ends
//!   with the population `skipped_users` row, which marks it complete.
//! * `user_metrics.csv`: `iteration,user_id,metric,value`, one row per user
//!   and per-user metric.
//! * `accepted.tsv`: `iteration<TAB>user_id<TAB>track_id`.
//!
//! Each iteration is appended with a single write, metrics last.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use super::checkpoint::{write_checkpoint, CheckpointState};
use super::engine::RecordSink;
use super::record::{metric, IterationRecord, UserRecord};
use super::SimError;
use crate::data::{InteractionDataset, UserIdx};

pub const METRICS_FILE: &str = "metrics.csv";
pub const USER_METRICS_FILE: &str = "user_metrics.csv";
pub const ACCEPTED_FILE: &str = "accepted.tsv";

pub const METRICS_HEADER: &str = "iteration,scope,model,metric,country,value";
pub const USER_METRICS_HEADER: &str = "iteration,user_id,metric,value";
pub const ACCEPTED_HEADER: &str = "iteration\tuser_id\ttrack_id";

fn csv_line(fields: &[&str]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(fields).expect("writing to memory");
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 input")
}

/// The `metrics.csv` rows of one iteration.
pub fn format_metrics_group(record: &IterationRecord, ds: &InteractionDataset, model: &str) -> String {
    let it = record.iteration.to_string();
    let mut out = String::new();
    let mut row = |scope: &str, name: &str, country: &str, value: String| {
        out.push_str(&csv_line(&[&it, scope, model, name, country, &value]));
    };
    for (country, means) in record.country_means(ds) {
        for name in metric::PER_USER {
            if let Some(v) = means.get(name) {
                row("country", name, country.as_str(), v.to_string());
            }
        }
        row("country", metric::USERS, country.as_str(), means.users.to_string());
    }
    let pop = record.population_means();
    for name in metric::PER_USER {
        if let Some(v) = pop.get(name) {
            row("population", name, "", v.to_string());
        }
    }
    if let Some(n) = record.validation_ndcg {
        row("population", metric::NDCG_VALIDATION, "", n.to_string());
    }
    row("population", metric::USERS, "", pop.users.to_string());
    row("population", metric::SKIPPED_USERS, "", record.skipped_users.to_string());
    out
}

pub fn format_user_rows(record: &IterationRecord, ds: &InteractionDataset) -> String {
    let it = record.iteration.to_string();
    let mut out = String::new();
    for r in &record.users {
        let id = &ds.user(r.user).id;
        for name in metric::PER_USER {
            if let Some(v) = r.get(name) {
                out.push_str(&csv_line(&[&it, id, name, &v.to_string()]));
            }
        }
    }
    out
}

pub fn format_accepted(record: &IterationRecord, ds: &InteractionDataset) -> String {
    let mut out = String::new();
    for r in &record.users {
        if let Some(t) = r.accepted {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                record.iteration,
                ds.user(r.user).id,
                ds.track(t).id
            ));
        }
    }
    out
}

fn append(path: &Path, text: &str) -> Result<(), SimError> {
    let mut f = OpenOptions::new()
        .append(true)
        .open(path)
        .map_err(|e| SimError::io(path, e))?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| SimError::io(path, e))
}

/// Writes records and checkpoints into a run directory.
pub struct RunWriter {
    dir: PathBuf,
    model: String,
    seed: u64,
    /// Interactions of the initial dataset, for checkpoints.
    initial_interactions: usize,
}

impl RunWriter {
    /// Creates the directory and fresh output files with headers.
    pub fn create(dir: &Path, model: &str, seed: u64, initial: &InteractionDataset) -> Result<Self, SimError> {
        std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
        for (name, header) in [
            (METRICS_FILE, METRICS_HEADER),
            (USER_METRICS_FILE, USER_METRICS_HEADER),
            (ACCEPTED_FILE, ACCEPTED_HEADER),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, format!("{header}\n")).map_err(|e| SimError::io(&path, e))?;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            model: model.to_string(),
            seed,
            initial_interactions: initial.initial_interaction_count(),
        })
    }

    /// Continues writing into files that already hold earlier iterations.
    pub fn append_to(dir: &Path, model: &str, seed: u64, initial_interactions: usize) -> Result<Self, SimError> {
        for name in [METRICS_FILE, USER_METRICS_FILE, ACCEPTED_FILE] {
            let path = dir.join(name);
            if !path.is_file() {
                return Err(SimError::io(
                    &path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "missing output file"),
                ));
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            model: model.to_string(),
            seed,
            initial_interactions,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl RecordSink for RunWriter {
    fn record(&mut self, record: &IterationRecord, ds: &InteractionDataset) -> Result<(), SimError> {
        append(&self.dir.join(USER_METRICS_FILE), &format_user_rows(record, ds))?;
        append(&self.dir.join(ACCEPTED_FILE), &format_accepted(record, ds))?;
        append(
            &self.dir.join(METRICS_FILE),
            &format_metrics_group(record, ds, &self.model),
        )
    }

    fn checkpoint(&mut self, iteration: u32, ds: &InteractionDataset) -> Result<(), SimError> {
        let state = CheckpointState {
            iteration,
            seed: self.seed,
            model: self.model.clone(),
            initial_interactions: self.initial_interactions,
        };
        write_checkpoint(&self.dir, ds, &state).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub iteration: u32,
    pub scope: String,
    pub model: String,
    pub metric: String,
    pub country: Option<String>,
    pub value: f64,
}

/// A fully validated `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
    pub last_iteration: u32,
}

impl MetricsTable {
    pub fn population(&self, iteration: u32, name: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.iteration == iteration && r.scope == "population" && r.metric == name)
            .map(|r| r.value)
    }

    pub fn model(&self) -> &str {
        self.rows.first().map_or("", |r| r.model.as_str())
    }
}

/// Reads `metrics.csv`, rejecting malformed rows and incomplete trailing
/// iteration groups.
pub fn read_metrics_csv(path: &Path) -> Result<MetricsTable, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    parse_metrics(&text)
}

fn parse_metrics(text: &str) -> Result<MetricsTable, SimError> {
    let mut last_good: Option<u32> = None;
    let fail = |line: usize, reason: String, last_good: Option<u32>| SimError::TruncatedMetrics {
        line,
        reason,
        last_good,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| fail(1, e.to_string(), None))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != METRICS_HEADER {
        return Err(fail(1, format!("unexpected header {header:?}"), None));
    }

    let mut rows = Vec::new();
    let mut open_group: Option<(u32, usize)> = None;
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| fail(line, e.to_string(), last_good))?;
        if rec.len() != 6 {
            return Err(fail(line, format!("expected 6 fields, found {}", rec.len()), last_good));
        }
        let iteration: u32 = rec[0]
            .parse()
            .map_err(|_| fail(line, format!("invalid iteration {:?}", &rec[0]), last_good))?;
        let value: f64 = rec[5]
            .parse()
            .map_err(|_| fail(line, format!("invalid value {:?}", &rec[5]), last_good))?;
        let expected = last_good.map_or(0, |g| g + 1);
        if iteration != expected {
            return Err(fail(
                line,
                format!("expected iteration {expected}, found {iteration}"),
                last_good,
            ));
        }
        let scope = rec[1].to_string();
        if scope != "population" && scope != "country" {
            return Err(fail(line, format!("invalid scope {scope:?}"), last_good));
        }
        open_group.get_or_insert((iteration, line));
        let closes = scope == "population" && &rec[3] == metric::SKIPPED_USERS;
        rows.push(MetricsRow {
            iteration,
            scope,
            model: rec[2].to_string(),
            metric: rec[3].to_string(),
            country: (!rec[4].is_empty()).then(|| rec[4].to_string()),
            value,
        });
        if closes {
            last_good = Some(iteration);
            open_group = None;
        }
    }
    if let Some((iteration, line)) = open_group {
        return Err(fail(
            line,
            format!("iteration {iteration} is incomplete"),
            last_good,
        ));
    }
    let last_iteration = last_good.ok_or_else(|| fail(2, "no complete iteration".into(), None))?;
    Ok(MetricsTable {
        rows,
        last_iteration,
    })
}

/// Rebuilds iteration records from a run directory. Users are resolved
/// against `initial`; only iterations complete in `metrics.csv` are returned.
pub fn read_records(dir: &Path, initial: &InteractionDataset) -> Result<Vec<IterationRecord>, SimError> {
    let table = read_metrics_csv(&dir.join(METRICS_FILE))?;
    let last = table.last_iteration;
    let bad = |file: &str, line: usize, msg: String| {
        SimError::Checkpoint(format!("{file} line {line}: {msg}"))
    };

    let blank = |u: usize| UserRecord {
        user: UserIdx(u as u32),
        rec_local: None,
        rec_us: None,
        rec_country_jsd: None,
        prof_local: f64::NAN,
        prof_us: f64::NAN,
        prof_country_jsd: f64::NAN,
        prof_pop_jsd_current: f64::NAN,
        prof_pop_jsd_frozen: f64::NAN,
        accepted: None,
    };
    let mut users: BTreeMap<u32, Vec<UserRecord>> = (0..=last)
        .map(|i| (i, (0..initial.num_users()).map(blank).collect()))
        .collect();

    let path = dir.join(USER_METRICS_FILE);
    let mut reader = csv::Reader::from_path(&path).map_err(|e| bad(USER_METRICS_FILE, 1, e.to_string()))?;
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(USER_METRICS_FILE, line, e.to_string()))?;
        if rec.len() != 4 {
            return Err(bad(USER_METRICS_FILE, line, "expected 4 fields".into()));
        }
        let Ok(iteration) = rec[0].parse::<u32>() else {
            return Err(bad(USER_METRICS_FILE, line, format!("invalid iteration {:?}", &rec[0])));
        };
        let Some(slot) = users.get_mut(&iteration) else {
            continue;
        };
        let u = initial
            .user_index(&rec[1])
            .ok_or_else(|| bad(USER_METRICS_FILE, line, format!("unknown user {:?}", &rec[1])))?;
        let v: f64 = rec[3]
            .parse()
            .map_err(|_| bad(USER_METRICS_FILE, line, format!("invalid value {:?}", &rec[3])))?;
        let r = &mut slot[u.index()];
        match &rec[2] {
            metric::REC_LOCAL => r.rec_local = Some(v),
            metric::REC_US => r.rec_us = Some(v),
            metric::REC_COUNTRY_JSD => r.rec_country_jsd = Some(v),
            metric::PROF_LOCAL => r.prof_local = v,
            metric::PROF_US => r.prof_us = v,
            metric::PROF_COUNTRY_JSD => r.prof_country_jsd = v,
            metric::PROF_POP_JSD_CURRENT => r.prof_pop_jsd_current = v,
            metric::PROF_POP_JSD_FROZEN => r.prof_pop_jsd_frozen = v,
            other => return Err(bad(USER_METRICS_FILE, line, format!("unknown metric {other:?}"))),
        }
    }

    let path = dir.join(ACCEPTED_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| SimError::io(&path, e))?;
    for (i, l) in text.lines().enumerate().skip(1) {
        let line = i + 1;
        let fields: Vec<&str> = l.split('\t').collect();
        let [it, user, track] = fields[..] else {
            return Err(bad(ACCEPTED_FILE, line, "expected 3 fields".into()));
        };
        let Ok(it) = it.parse::<u32>() else {
            return Err(bad(ACCEPTED_FILE, line, format!("invalid iteration {it:?}")));
        };
        let Some(slot) = users.get_mut(&it) else {
            continue;
        };
        let (Some(u), Some(t)) = (initial.user_index(user), initial.track_index(track)) else {
            return Err(bad(ACCEPTED_FILE, line, format!("unknown user or track in {l:?}")));
        };
        slot[u.index()].accepted = Some(t);
    }

    let mut records = Vec::with_capacity(users.len());
    for (iteration, users) in users {
        if let Some(r) = users.iter().find(|r| r.prof_local.is_nan()) {
            return Err(SimError::Checkpoint(format!(
                "{USER_METRICS_FILE}: no profile metrics for user {} at iteration {iteration}",
                initial.user(r.user).id
            )));
        }
        let skipped = table
            .population(iteration, metric::SKIPPED_USERS)
            .unwrap_or(0.0) as usize;
        records.push(IterationRecord {
            iteration,
            validation_ndcg: table.population(iteration, metric::NDCG_VALIDATION),
            users,
            skipped_users: skipped,
            exclusion_violations: 0,
        });
    }
    Ok(records)
}

/// Copies the first `upto` complete iterations of the three output files
/// from `src` into `dst`.
pub(crate) fn copy_prefix(src: &Path, dst: &Path, upto: u32) -> Result<(), SimError> {
    std::fs::create_dir_all(dst).map_err(|e| SimError::io(dst, e))?;
    for name in [METRICS_FILE, USER_METRICS_FILE, ACCEPTED_FILE] {
        let from = src.join(name);
        let text = std::fs::read_to_string(&from).map_err(|e| SimError::io(&from, e))?;
        let sep = if name == ACCEPTED_FILE { '\t' } else { ',' };
        let mut out = String::with_capacity(text.len());
        for (i, line) in text.lines().enumerate() {
            let keep = i == 0
                || line
                    .split(sep)
                    .next()
                    .and_then(|f| f.parse::<u32>().ok())
                    .is_some_and(|it| it <= upto);
            if keep {
                out.push_str(line);
                out.push('\n');
            }
        }
        let to = dst.join(name);
        let mut f = File::create(&to).map_err(|e| SimError::io(&to, e))?;
        f.write_all(out.as_bytes()).map_err(|e| SimError::io(&to, e))?;
    }
    Ok(())
}
