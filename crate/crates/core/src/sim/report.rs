//! Summary tables and figure series of a finished run.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PopularityMode;
use super::record::{metric, IterationRecord, UserRecord};
use super::SimError;
use crate::data::{CountryLabel, InteractionDataset};
use crate::metrics::{delta_percent, paired_t_test, DeltaMode, MetricsError, TTest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    /// Countries with fewer users than this are left out of the per-country
    /// tables.
    pub min_users: usize,
    /// Countries with fewer tracks than this are left out as well.
    pub min_tracks: usize,
    pub delta_mode: DeltaMode,
    pub popularity: PopularityMode,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            min_users: 100,
            min_tracks: 1000,
            delta_mode: DeltaMode::Relative,
            popularity: PopularityMode::Current,
        }
    }
}

/// Change of a proportion between the initial profiles and the last
/// iteration, over one group of users.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaRow {
    /// Country code, or `all`.
    pub scope: String,
    pub metric: &'static str,
    pub users: usize,
    pub baseline: f64,
    pub value: f64,
    /// `None` when undefined (zero baseline in relative mode).
    pub delta_percent: Option<f64>,
    /// `None` with fewer than two paired users.
    pub test: Option<TTest>,
}

impl DeltaRow {
    pub fn significant(&self) -> bool {
        self.test.is_some_and(|t| t.significant())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JsdRow {
    pub country: String,
    pub users: usize,
    pub tracks: usize,
    pub prof_country_jsd: f64,
    pub prof_pop_jsd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub model: String,
    pub final_iteration: u32,
    /// `rec_local`, `rec_us`, `prof_local`, `prof_us` over all users.
    pub population: Vec<DeltaRow>,
    pub jsd_prof: f64,
    pub pop_jsd_prof: f64,
    /// Validation NDCG@10 of the first iteration's model.
    pub ndcg_first: Option<f64>,
    /// Qualifying countries, most tracks first, then `all`.
    pub country_jsd: Vec<JsdRow>,
    /// `prof_local` and `prof_us` per qualifying country, then `all`.
    pub country_deltas: Vec<DeltaRow>,
    /// `(iteration, metric, value)` series.
    pub proportion_series: Vec<(u32, &'static str, f64)>,
    pub jsd_series: Vec<(u32, &'static str, f64)>,
    pub notes: Vec<String>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn delta_row(
    scope: &str,
    name: &'static str,
    before_metric: &str,
    baseline: &[&UserRecord],
    current: &[&UserRecord],
    mode: DeltaMode,
    notes: &mut Vec<String>,
) -> Option<DeltaRow> {
    let (before, after): (Vec<f64>, Vec<f64>) = baseline
        .iter()
        .zip(current)
        .filter_map(|(b, c)| Some((b.get(before_metric)?, c.get(name)?)))
        .unzip();
    if after.is_empty() {
        return None;
    }
    let (b, v) = (mean(&before), mean(&after));
    let delta = match delta_percent(v, b, mode) {
        Ok(d) => Some(d),
        Err(MetricsError::ZeroBaseline) => {
            notes.push(format!("{scope}: {name} delta undefined (zero baseline)"));
            None
        }
        Err(_) => None,
    };
    Some(DeltaRow {
        scope: scope.to_string(),
        metric: name,
        users: after.len(),
        baseline: b,
        value: v,
        delta_percent: delta,
        test: paired_t_test(&before, &after).ok(),
    })
}

fn delta_rows(
    scope: &str,
    metrics: &[(&'static str, &str)],
    baseline: &[&UserRecord],
    current: &[&UserRecord],
    mode: DeltaMode,
    notes: &mut Vec<String>,
) -> Vec<DeltaRow> {
    metrics
        .iter()
        .filter_map(|&(m, b)| delta_row(scope, m, b, baseline, current, mode, notes))
        .collect()
}

/// Builds the report from records starting at iteration 0.
pub fn final_report(
    records: &[IterationRecord],
    initial: &InteractionDataset,
    model: &str,
    opts: &ReportOptions,
) -> Result<Report, SimError> {
    let (Some(first), Some(last)) = (records.first(), records.last()) else {
        return Err(SimError::Config("no records to report on".into()));
    };
    if first.iteration != 0 {
        return Err(SimError::Config("records must start at iteration 0".into()));
    }
    let pop_metric = match opts.popularity {
        PopularityMode::Current => metric::PROF_POP_JSD_CURRENT,
        PopularityMode::Frozen => metric::PROF_POP_JSD_FROZEN,
    };
    let mut notes = Vec::new();
    let mode = opts.delta_mode;

    let all_base: Vec<&UserRecord> = first.users.iter().collect();
    let all_last: Vec<&UserRecord> = last.users.iter().collect();
    let population = delta_rows(
        "all",
        &[
            (metric::REC_LOCAL, metric::PROF_LOCAL),
            (metric::REC_US, metric::PROF_US),
            (metric::PROF_LOCAL, metric::PROF_LOCAL),
            (metric::PROF_US, metric::PROF_US),
        ],
        &all_base,
        &all_last,
        mode,
        &mut notes,
    );
    let final_means = last.population_means();
    let jsd_prof = final_means.get(metric::PROF_COUNTRY_JSD).unwrap_or(0.0);
    let pop_jsd_prof = final_means.get(pop_metric).unwrap_or(0.0);
    let ndcg_first = records
        .iter()
        .find(|r| r.iteration == 1)
        .and_then(|r| r.validation_ndcg);

    // Country sizes from the initial dataset.
    let mut sizes: BTreeMap<CountryLabel, (usize, usize)> = BTreeMap::new();
    for u in initial.users() {
        sizes.entry(u.country).or_default().0 += 1;
    }
    for t in initial.tracks() {
        sizes.entry(t.country).or_default().1 += 1;
    }
    let mut qualifying: Vec<(CountryLabel, usize, usize)> = sizes
        .iter()
        .filter(|(c, &(u, t))| !c.is_other() && u >= opts.min_users && t >= opts.min_tracks)
        .map(|(&c, &(u, t))| (c, u, t))
        .collect();
    qualifying.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
    if qualifying.is_empty() {
        notes.push(format!(
            "no country has at least {} users and {} tracks; per-country tables only hold `all`",
            opts.min_users, opts.min_tracks
        ));
    }

    let mut country_jsd = Vec::new();
    let mut country_deltas = Vec::new();
    let groups = qualifying
        .iter()
        .map(|&(c, u, t)| (Some(c), c.as_str().to_string(), u, t))
        .chain(std::iter::once((
            None,
            "all".to_string(),
            initial.num_users(),
            initial.num_tracks(),
        )));
    for (country, scope, users, tracks) in groups {
        let in_group = |r: &&UserRecord| country.is_none_or(|c| initial.user(r.user).country == c);
        let base: Vec<&UserRecord> = first.users.iter().filter(in_group).collect();
        let cur: Vec<&UserRecord> = last.users.iter().filter(in_group).collect();
        let avg = |name: &str| mean(&cur.iter().filter_map(|r| r.get(name)).collect::<Vec<_>>());
        country_jsd.push(JsdRow {
            country: scope.clone(),
            users,
            tracks,
            prof_country_jsd: avg(metric::PROF_COUNTRY_JSD),
            prof_pop_jsd: avg(pop_metric),
        });
        country_deltas.extend(delta_rows(
            &scope,
            &[
                (metric::PROF_LOCAL, metric::PROF_LOCAL),
                (metric::PROF_US, metric::PROF_US),
            ],
            &base,
            &cur,
            mode,
            &mut notes,
        ));
    }

    let mut proportion_series = Vec::new();
    let mut jsd_series = Vec::new();
    for r in records {
        let m = r.population_means();
        for name in [metric::REC_LOCAL, metric::REC_US, metric::PROF_LOCAL, metric::PROF_US] {
            if let Some(v) = m.get(name) {
                proportion_series.push((r.iteration, name, v));
            }
        }
        if let Some(v) = m.get(metric::PROF_COUNTRY_JSD) {
            jsd_series.push((r.iteration, metric::PROF_COUNTRY_JSD, v));
        }
        if let Some(v) = m.get(pop_metric) {
            jsd_series.push((r.iteration, "prof_pop_jsd", v));
        }
    }

    Ok(Report {
        model: model.to_string(),
        final_iteration: last.iteration,
        population,
        jsd_prof,
        pop_jsd_prof,
        ndcg_first,
        country_jsd,
        country_deltas,
        proportion_series,
        jsd_series,
        notes,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(path: &Path, e: csv::Error) -> SimError {
    SimError::io(path, std::io::Error::other(e))
}

impl Report {
    /// Writes `summary.csv`, `country_jsd.csv`, `country_deltas.csv`, `proportion_series.csv`,
    /// `jsd_series.csv` and `notes.txt` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), SimError> {
        std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
        let m = self.model.as_str();

        let write = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<(), SimError> {
            let path = dir.join(name);
            let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
            w.write_record(header).map_err(|e| csv_err(&path, e))?;
            for r in rows {
                w.write_record(&r).map_err(|e| csv_err(&path, e))?;
            }
            w.flush().map_err(|e| SimError::io(&path, e))
        };
        let delta_fields = |r: &DeltaRow| {
            vec![
                r.users.to_string(),
                r.baseline.to_string(),
                r.value.to_string(),
                opt(r.delta_percent),
                opt(r.test.map(|t| t.t)),
                opt(r.test.map(|t| t.p)),
                if r.significant() { "*" } else { "" }.to_string(),
            ]
        };

        let mut rows: Vec<Vec<String>> = self
            .population
            .iter()
            .map(|r| [vec![m.to_string(), r.metric.to_string()], delta_fields(r)].concat())
            .collect();
        let single = |name: &str, v: String| {
            let mut r = vec![m.to_string(), name.to_string(), String::new(), String::new(), v];
            r.resize(9, String::new());
            r
        };
        rows.push(single("prof_country_jsd", self.jsd_prof.to_string()));
        rows.push(single("prof_pop_jsd", self.pop_jsd_prof.to_string()));
        rows.push(single("ndcg_first", opt(self.ndcg_first)));
        write(
            "summary.csv",
            &["model", "metric", "users", "baseline", "value", "delta_percent", "t", "p_value", "star"],
            rows,
        )?;

        write(
            "country_jsd.csv",
            &["model", "country", "users", "tracks", "prof_country_jsd", "prof_pop_jsd"],
            self.country_jsd
                .iter()
                .map(|r| {
                    vec![
                        m.to_string(),
                        r.country.clone(),
                        r.users.to_string(),
                        r.tracks.to_string(),
                        r.prof_country_jsd.to_string(),
                        r.prof_pop_jsd.to_string(),
                    ]
                })
                .collect(),
        )?;

        write(
            "country_deltas.csv",
            &[
                "model", "country", "metric", "users", "baseline", "value", "delta_percent", "t",
                "p_value", "star",
            ],
            self.country_deltas
                .iter()
                .map(|r| {
                    [
                        vec![m.to_string(), r.scope.clone(), r.metric.to_string()],
                        delta_fields(r),
                    ]
                    .concat()
                })
                .collect(),
        )?;

        for (name, series) in [("proportion_series.csv", &self.proportion_series), ("jsd_series.csv", &self.jsd_series)] {
            write(
                name,
                &["iteration", "model", "metric", "value"],
                series
                    .iter()
                    .map(|(i, metric, v)| {
                        vec![i.to_string(), m.to_string(), metric.to_string(), v.to_string()]
                    })
                    .collect(),
            )?;
        }

        let path = dir.join("notes.txt");
        let mut text = self.notes.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        std::fs::write(&path, text).map_err(|e| SimError::io(&path, e))
    }
}
