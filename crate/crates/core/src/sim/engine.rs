use std::collections::BTreeMap;

use super::config::SimulationConfig;
use super::record::{IterationRecord, UserRecord};
use super::SimError;
use crate::choice::sample_accepted_item;
use crate::data::{random_split, CountryLabel, InteractionDataset, TrackIdx, UserIdx};
use crate::metrics::{
    country_distribution, country_proportions, popularity_binning, popularity_distribution,
    AttributeDistribution, MetricsError, PopularityBinning,
};
use crate::par::try_map_range;
use crate::recommend::{
    recommend_top_k, validation_ndcg, FitContext, FittedModel, RecommendationList,
};
use crate::rng::{derive_seed, stream_rng, Stream};

/// Receives every iteration record as soon as it is measured.
pub trait RecordSink {
    fn record(
        &mut self,
        record: &IterationRecord,
        dataset: &InteractionDataset,
    ) -> Result<(), SimError>;

    /// Called after `record` on iterations that are due a checkpoint.
    fn checkpoint(
        &mut self,
        _iteration: u32,
        _dataset: &InteractionDataset,
    ) -> Result<(), SimError> {
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl RecordSink for NullSink {
    fn record(&mut self, _: &IterationRecord, _: &InteractionDataset) -> Result<(), SimError> {
        Ok(())
    }
}

/// Keeps records in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub records: Vec<IterationRecord>,
    pub checkpoints: Vec<u32>,
}

impl RecordSink for MemorySink {
    fn record(&mut self, r: &IterationRecord, _: &InteractionDataset) -> Result<(), SimError> {
        self.records.push(r.clone());
        Ok(())
    }

    fn checkpoint(&mut self, iteration: u32, _: &InteractionDataset) -> Result<(), SimError> {
        self.checkpoints.push(iteration);
        Ok(())
    }
}

/// Result of one loop iteration.
pub struct IterationOutcome {
    pub dataset: InteractionDataset,
    pub record: IterationRecord,
    pub model: FittedModel,
    /// Per user, the list the model produced; `None` if it was empty.
    pub recommendations: Vec<Option<RecommendationList>>,
}

/// A configured loop over a fixed initial dataset.
pub struct Simulation {
    config: SimulationConfig,
    initial: InteractionDataset,
    track_countries: Vec<CountryLabel>,
    initial_country: Vec<AttributeDistribution>,
    frozen_binning: PopularityBinning,
    initial_pop_frozen: Vec<AttributeDistribution>,
}

impl Simulation {
    /// Augmented interactions in `dataset` are ignored: the initial state is
    /// its `Initial` interactions.
    pub fn new(dataset: &InteractionDataset, config: SimulationConfig) -> Result<Self, SimError> {
        config.validate()?;
        let initial = dataset.initial_only();
        if initial.is_empty() {
            return Err(SimError::Config("the dataset has no interactions".into()));
        }
        if let Some(u) = initial.user_ids().find(|&u| initial.profile(u).is_empty()) {
            return Err(SimError::Config(format!(
                "user {} has no initial interactions",
                initial.user(u).id
            )));
        }
        let track_countries = initial.track_countries();
        let initial_country = initial
            .user_ids()
            .map(|u| country_distribution(initial.profile(u), initial.user(u).country, &track_countries))
            .collect::<Result<Vec<_>, _>>()?;
        let frozen_binning = popularity_binning(
            &initial,
            config.popularity_high_share,
            config.popularity_low_share,
        );
        let initial_pop_frozen = initial
            .user_ids()
            .map(|u| popularity_distribution(initial.profile(u), &frozen_binning))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            config,
            initial,
            track_countries,
            initial_country,
            frozen_binning,
            initial_pop_frozen,
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn initial(&self) -> &InteractionDataset {
        &self.initial
    }

    /// Iteration 0: measurements of the initial dataset.
    pub fn baseline_record(&self) -> Result<IterationRecord, SimError> {
        self.measure(&self.initial, 0, None, &[])
    }

    /// Split, fit, recommend, accept and augment once.
    ///
    /// `previous` is the model of the previous iteration; it is used as the
    /// starting point when warm starts are enabled.
    pub fn run_iteration(
        &self,
        ds: &InteractionDataset,
        iteration: u32,
        previous: Option<&FittedModel>,
    ) -> Result<IterationOutcome, SimError> {
        self.check_compatible(ds)?;
        let cfg = &self.config;
        let par = cfg.parallelism;
        let it = u64::from(iteration);

        let split = random_split(ds, cfg.split, derive_seed(cfg.seed, Stream::Split, &[it]))?;
        let train = split.train_matrix(ds);
        let validation = split.validation_matrix(ds);
        let ctx = FitContext {
            dataset: ds,
            train: &train,
            validation: &validation,
            training: &cfg.training,
            seed: derive_seed(cfg.seed, Stream::Fit, &[it]),
            parallelism: par,
        };
        // Fixture scores are static, so the loaded file is always reused.
        let warm = match previous {
            Some(m @ FittedModel::Fixture(_)) => Some(m),
            Some(m) if cfg.warm_start => Some(m),
            _ => None,
        };
        let model = FittedModel::fit(&cfg.model, &ctx, warm)
            .map_err(|e| SimError::recommend(iteration, e))?;
        let rec = model.as_recommender();
        let ndcg = validation_ndcg(rec, &train, &validation, cfg.training.eval_k, par)
            .map_err(|e| SimError::recommend(iteration, e))?;

        let per_user = try_map_range(par, ds.num_users(), |u| {
            let user = UserIdx(u as u32);
            let list = recommend_top_k(rec, user, cfg.choice.k, ds.seen(user))
                .map_err(|e| SimError::recommend(iteration, e))?;
            if list.is_empty() {
                return Ok((None, None));
            }
            let mut rng = stream_rng(cfg.seed, Stream::Accept, &[it, u as u64]);
            let accepted = sample_accepted_item(&list, &cfg.choice, &mut rng)?;
            Ok::<_, SimError>((Some(list), Some(accepted)))
        })?;

        let mut accepted = BTreeMap::new();
        let mut recommendations = Vec::with_capacity(per_user.len());
        for (u, (list, acc)) in per_user.into_iter().enumerate() {
            if let Some(t) = acc {
                accepted.insert(UserIdx(u as u32), t);
            }
            recommendations.push(list);
        }
        let skipped = recommendations.iter().filter(|l| l.is_none()).count();
        if skipped > 0 {
            log::warn!("iteration {iteration}: {skipped} users received no recommendations");
        }
        let violations: usize = recommendations
            .iter()
            .enumerate()
            .filter_map(|(u, l)| l.as_ref().map(|l| (u, l)))
            .map(|(u, l)| {
                l.entries
                    .iter()
                    .filter(|e| ds.has_seen(UserIdx(u as u32), e.track))
                    .count()
            })
            .sum();

        let dataset = ds.augment(&accepted, iteration)?;
        let mut record = self.measure(&dataset, iteration, Some(ndcg), &recommendations)?;
        record.exclusion_violations = violations;
        for r in &mut record.users {
            r.accepted = accepted.get(&r.user).copied();
        }
        Ok(IterationOutcome {
            dataset,
            record,
            model,
            recommendations,
        })
    }

    /// Runs iterations `start..=iterations` from `dataset`, which must be the
    /// state after iteration `start - 1`. Returns the final dataset.
    pub fn run_from(
        &self,
        dataset: InteractionDataset,
        start: u32,
        sink: &mut dyn RecordSink,
    ) -> Result<InteractionDataset, SimError> {
        if start == 0 {
            return Err(SimError::Config("iterations are numbered from 1".into()));
        }
        let mut ds = dataset;
        let mut previous: Option<FittedModel> = None;
        for iteration in start..=self.config.iterations {
            let out = self.run_iteration(&ds, iteration, previous.as_ref())?;
            log::info!(
                "iteration {iteration}/{}: ndcg@{} = {:.4}, {} interactions",
                self.config.iterations,
                self.config.training.eval_k,
                out.record.validation_ndcg.unwrap_or(f64::NAN),
                out.dataset.num_interactions()
            );
            sink.record(&out.record, &out.dataset)?;
            if self
                .config
                .checkpoint_every
                .is_some_and(|every| iteration % every == 0)
            {
                sink.checkpoint(iteration, &out.dataset)?;
            }
            ds = out.dataset;
            previous = Some(out.model);
        }
        Ok(ds)
    }

    /// Baseline record followed by every iteration.
    pub fn run(&self, sink: &mut dyn RecordSink) -> Result<InteractionDataset, SimError> {
        sink.record(&self.baseline_record()?, &self.initial)?;
        self.run_from(self.initial.clone(), 1, sink)
    }

    fn check_compatible(&self, ds: &InteractionDataset) -> Result<(), SimError> {
        if ds.num_users() != self.initial.num_users() || ds.num_tracks() != self.initial.num_tracks()
        {
            return Err(SimError::Config(
                "dataset does not match the simulation's initial dataset".into(),
            ));
        }
        Ok(())
    }

    fn measure(
        &self,
        ds: &InteractionDataset,
        iteration: u32,
        validation_ndcg: Option<f64>,
        recommendations: &[Option<RecommendationList>],
    ) -> Result<IterationRecord, SimError> {
        let cfg = &self.config;
        let current_binning =
            popularity_binning(ds, cfg.popularity_high_share, cfg.popularity_low_share);
        let tc = &self.track_countries;
        let users = try_map_range(cfg.parallelism, ds.num_users(), |u| {
            let user = UserIdx(u as u32);
            let country = ds.user(user).country;
            let profile = ds.profile(user);
            let (prof_local, prof_us) = country_proportions(profile, country, tc)?;
            let prof_country_jsd =
                country_distribution(profile, country, tc)?.jsd(&self.initial_country[u])?;
            let initial_profile = self.initial.profile(user);
            let prof_pop_jsd_current = popularity_distribution(profile, &current_binning)?
                .jsd(&popularity_distribution(initial_profile, &current_binning)?)?;
            let prof_pop_jsd_frozen = popularity_distribution(profile, &self.frozen_binning)?
                .jsd(&self.initial_pop_frozen[u])?;

            let (mut rec_local, mut rec_us, mut rec_country_jsd) = (None, None, None);
            if let Some(Some(list)) = recommendations.get(u) {
                let items: Vec<TrackIdx> = list.tracks();
                let (l, us) = country_proportions(&items, country, tc)?;
                rec_local = Some(l);
                rec_us = Some(us);
                rec_country_jsd = Some(
                    country_distribution(&items, country, tc)?.jsd(&self.initial_country[u])?,
                );
            }
            Ok::<_, MetricsError>(UserRecord {
                user,
                rec_local,
                rec_us,
                rec_country_jsd,
                prof_local,
                prof_us,
                prof_country_jsd,
                prof_pop_jsd_current,
                prof_pop_jsd_frozen,
                accepted: None,
            })
        })?;
        let skipped_users = if iteration == 0 {
            0
        } else {
            recommendations.iter().filter(|l| l.is_none()).count()
        };
        Ok(IterationRecord {
            iteration,
            validation_ndcg,
            users,
            skipped_users,
            exclusion_violations: 0,
        })
    }
}

/// Runs a full simulation and returns every record (iteration 0 first) and
/// the final dataset.
pub fn run_simulation(
    dataset: &InteractionDataset,
    config: SimulationConfig,
) -> Result<(Vec<IterationRecord>, InteractionDataset), SimError> {
    let sim = Simulation::new(dataset, config)?;
    let mut sink = MemorySink::default();
    let last = sim.run(&mut sink)?;
    Ok((sink.records, last))
}
