//! Acceptance gate. Each criterion runs in isolation and prints one
//! `PASS`/`FAIL` line with the measured numbers; the test fails if any
//! criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use loopsim_core::choice::{acceptance_probabilities, sample_rank};
use loopsim_core::data::synthetic::{BlockConfig, CountrySkewConfig, GeneratorConfig};
use loopsim_core::data::{random_split, SplitRatios, UserItemMatrix};
use loopsim_core::metrics::{jsd, paired_t_test, BONFERRONI_ALPHA};
use loopsim_core::recommend::{
    recommend_top_k, validation_ndcg, BprConfig, BprModel, BprParams, FitContext, ItemKnnConfig,
    ItemKnnModel, PopModel, RecommendError, Recommender, TrainingConfig,
};
use loopsim_core::rng::{derive_seed, Stream};
use loopsim_core::sim::{
    checkpoint_dir, resume_in_dir, run_simulation, run_to_dir, IterationRecord, Simulation,
    SimulationConfig, ACCEPTED_FILE, METRICS_FILE, USER_METRICS_FILE,
};
use loopsim_core::{Parallelism, TrackIdx, UserIdx};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

// ---------------------------------------------------------------- JSD

/// Textbook form: mean KL divergence to the midpoint, natural log, divided
/// by ln 2.
fn reference_jsd(h: &[f64], g: &[f64]) -> f64 {
    let kl = |p: &[f64], m: &[f64]| -> f64 {
        p.iter()
            .zip(m)
            .filter(|(&pi, _)| pi > 0.0)
            .map(|(&pi, &mi)| pi * (pi / mi).ln())
            .sum()
    };
    let m: Vec<f64> = h.iter().zip(g).map(|(a, b)| 0.5 * (a + b)).collect();
    (0.5 * kl(h, &m) + 0.5 * kl(g, &m)) / std::f64::consts::LN_2
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen::<f64>() })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[rng.gen_range(0..n)] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

fn jsd_correctness() -> Outcome {
    let j = |a: &[f64], b: &[f64]| jsd(a, b).map_err(|e| e.to_string());
    for h in [[1.0, 0.0, 0.0], [0.2, 0.3, 0.5], [1.0 / 3.0; 3], [0.0, 0.25, 0.75]] {
        let v = j(&h, &h)?;
        check(v == 0.0, || format!("jsd(h, h) = {v:e} for {h:?}"))?;
    }
    let one = j(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0])?;
    check((one - 1.0).abs() <= 1e-12, || format!("disjoint jsd = {one}"))?;
    let half = j(&[1.0, 0.0], &[0.5, 0.5])?;
    let reference = reference_jsd(&[1.0, 0.0], &[0.5, 0.5]);
    check((half - 0.3113).abs() <= 1e-4 && (half - reference).abs() <= 1e-12, || {
        format!("jsd((1,0),(.5,.5)) = {half}, reference {reference}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let h = random_simplex(&mut rng, 3);
        let g = random_simplex(&mut rng, 3);
        let (a, b) = (j(&h, &g)?, j(&g, &h)?);
        check(a.to_bits() == b.to_bits(), || format!("asymmetric: {h:?} {g:?}"))?;
        check((0.0..=1.0).contains(&a), || format!("out of bounds {a}: {h:?} {g:?}"))?;
        worst = worst.max((a - reference_jsd(&h, &g)).abs());
    }
    check(worst <= 1e-12, || format!("max deviation from reference {worst:e}"))?;
    Ok(format!(
        "jsd((1,0),(.5,.5)) = {half:.6}; 10^4 fuzzed pairs symmetric, bounded, max |diff| vs reference {worst:.1e}"
    ))
}

// ---------------------------------------------------------------- acceptance probabilities

fn acceptance_probability_oracle() -> Outcome {
    let mut worst_sum = 0.0f64;
    let alphas: Vec<f64> = (0..=24)
        .map(|i| -10f64.powf(-2.0 + (i as f64) * (5f64.log10() + 2.0) / 24.0))
        .collect();
    for &alpha in &alphas {
        for k in 1..=1000 {
            let p = acceptance_probabilities(k, alpha).map_err(|e| e.to_string())?;
            worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
        }
    }
    check(worst_sum <= 1e-12, || format!("max |sum - 1| = {worst_sum:e}"))?;

    let text = std::fs::read_to_string(fixture("acceptance_probabilities.json"))
        .map_err(|e| e.to_string())?;
    let oracle: BTreeMap<String, Vec<String>> =
        serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let mut worst_oracle = 0.0f64;
    for (key, k, alpha) in [("k10_alpha-0.1", 10, -0.1), ("k2_alpha-0.1", 2, -0.1), ("k5_alpha-1.5", 5, -1.5)] {
        let p = acceptance_probabilities(k, alpha).map_err(|e| e.to_string())?;
        let expected: Vec<f64> = oracle[key].iter().map(|s| s.parse().unwrap()).collect();
        for (a, b) in p.iter().zip(&expected) {
            worst_oracle = worst_oracle.max((a - b).abs());
        }
    }
    check(worst_oracle <= 1e-12, || format!("max |p - oracle| = {worst_oracle:e}"))?;

    let p = acceptance_probabilities(10, -0.1).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let draws = 1_000_000;
    let mut counts = [0usize; 10];
    for _ in 0..draws {
        counts[sample_rank(&p, &mut rng)] += 1;
    }
    let worst_mc = counts
        .iter()
        .zip(&p)
        .map(|(&c, &pi)| (c as f64 / draws as f64 - pi).abs())
        .fold(0.0, f64::max);
    check(worst_mc <= 0.01, || format!("Monte Carlo deviation {worst_mc}"))?;
    Ok(format!(
        "max |sum-1| {worst_sum:.1e} over {} alphas x k=1..1000; oracle diff {worst_oracle:.1e}; 10^6 draws max freq diff {worst_mc:.4}",
        alphas.len()
    ))
}

// ---------------------------------------------------------------- model oracles

fn pop_oracle() -> Result<String, String> {
    // 20 items, counts with ties; users with varied seen-sets.
    let counts = [5, 3, 7, 7, 1, 0, 2, 9, 3, 3, 4, 6, 1, 8, 2, 2, 5, 0, 4, 6];
    let n_users = counts.iter().max().unwrap() + 2;
    let mut rows = vec![Vec::new(); n_users];
    for (item, &c) in counts.iter().enumerate() {
        for row in rows.iter_mut().take(c) {
            row.push(item as u32);
        }
    }
    let train = UserItemMatrix::from_rows(20, rows);
    let model = PopModel::fit(&train).map_err(|e| e.to_string())?;
    for u in 0..n_users {
        let seen: Vec<TrackIdx> = train.row(UserIdx(u as u32)).iter().map(|&i| TrackIdx(i)).collect();
        let mut brute: Vec<usize> = (0..20).filter(|&i| !seen.contains(&TrackIdx(i as u32))).collect();
        brute.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
        for k in [1, 5, 20] {
            let got: Vec<usize> = recommend_top_k(&model, UserIdx(u as u32), k, &seen)
                .map_err(|e| e.to_string())?
                .tracks()
                .iter()
                .map(|t| t.index())
                .collect();
            let want: Vec<usize> = brute.iter().copied().take(k).collect();
            check(got == want, || format!("Pop user {u} k={k}: {got:?} != {want:?}"))?;
        }
    }
    Ok("Pop = count-sort on 20 items".into())
}

fn itemknn_oracle() -> Result<String, String> {
    let dense: [[u8; 6]; 5] = [
        [1, 1, 0, 0, 1, 0],
        [1, 0, 1, 0, 1, 1],
        [0, 1, 1, 1, 0, 0],
        [1, 1, 0, 1, 0, 0],
        [0, 0, 1, 1, 1, 0],
    ];
    let rows: Vec<Vec<u32>> = dense
        .iter()
        .map(|r| (0..6).filter(|&i| r[i] == 1).map(|i| i as u32).collect())
        .collect();
    let train = UserItemMatrix::from_rows(6, rows.clone());
    let model = ItemKnnModel::fit(&train, &ItemKnnConfig::default(), Parallelism::Sequential)
        .map_err(|e| e.to_string())?;

    let col = |i: usize| -> Vec<f64> { dense.iter().map(|r| f64::from(r[i])).collect() };
    let cos = |i: usize, j: usize| -> f64 {
        let (a, b) = (col(i), col(j));
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 { 0.0 } else { dot / (na * nb) }
    };
    let mut worst = 0.0f64;
    for (u, row) in dense.iter().enumerate() {
        let scores = model.scores(UserIdx(u as u32)).map_err(|e| e.to_string())?;
        let brute: Vec<f64> = (0..6)
            .map(|i| (0..6).filter(|&j| j != i).map(|j| cos(i, j) * f64::from(row[j])).sum())
            .collect();
        for (a, b) in scores.iter().zip(&brute) {
            worst = worst.max((a - b).abs());
        }
        let seen: Vec<TrackIdx> = rows[u].iter().map(|&i| TrackIdx(i)).collect();
        let mut order: Vec<usize> = (0..6).filter(|&i| row[i] == 0).collect();
        order.sort_by(|&a, &b| brute[b].total_cmp(&brute[a]).then(a.cmp(&b)));
        order.truncate(3);
        let got: Vec<usize> = recommend_top_k(&model, UserIdx(u as u32), 3, &seen)
            .map_err(|e| e.to_string())?
            .tracks()
            .iter()
            .map(|t| t.index())
            .collect();
        check(got == order, || format!("ItemKNN top-3 user {u}: {got:?} != {order:?}"))?;
    }
    check(worst <= 1e-9, || format!("ItemKNN max score diff {worst:e}"))?;
    Ok(format!("ItemKNN 5x6 max |score diff| {worst:.1e}"))
}

fn bpr_gradient_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let l2 = 0.05;
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let mut p = BprParams::random(3, 4, 2, &mut rng);
        for b in &mut p.item_bias {
            *b = rng.gen_range(-1.0..1.0);
        }
        let (u, i, j) = (rng.gen_range(0..3), 0usize, rng.gen_range(1..4));
        let g = p.triple_gradient(u, i, j, l2);
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        let fd = |p: &mut BprParams, get: &dyn Fn(&mut BprParams) -> &mut f64| {
            let x0 = *get(p);
            *get(p) = x0 + h;
            let up = p.triple_loss(u, i, j, l2);
            *get(p) = x0 - h;
            let down = p.triple_loss(u, i, j, l2);
            *get(p) = x0;
            (up - down) / (2.0 * h)
        };
        for d in 0..2 {
            analytic.extend([g.user[d], g.pos_item[d], g.neg_item[d]]);
            numeric.push(fd(&mut p, &|p| &mut p.user_factors[u * 2 + d]));
            numeric.push(fd(&mut p, &|p| &mut p.item_factors[i * 2 + d]));
            numeric.push(fd(&mut p, &|p| &mut p.item_factors[j * 2 + d]));
        }
        analytic.extend([g.pos_bias, g.neg_bias]);
        numeric.push(fd(&mut p, &|p| &mut p.item_bias[i]));
        numeric.push(fd(&mut p, &|p| &mut p.item_bias[j]));
        for (a, n) in analytic.iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
            worst = worst.max(rel);
        }
    }
    check(worst < 1e-4, || format!("BPR max relative gradient error {worst:e}"))?;
    Ok(format!("BPR max relative gradient error {worst:.1e}"))
}

fn model_oracles() -> Outcome {
    Ok([pop_oracle()?, itemknn_oracle()?, bpr_gradient_oracle()?].join("; "))
}

// ---------------------------------------------------------------- BPR learning

struct RandomScorer {
    n_items: usize,
    seed: u64,
}

impl Recommender for RandomScorer {
    fn name(&self) -> &str {
        "Random"
    }

    fn num_items(&self) -> usize {
        self.n_items
    }

    fn score_into(&self, user: UserIdx, out: &mut [f64]) -> Result<(), RecommendError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (u64::from(user.0) << 32));
        out.iter_mut().for_each(|o| *o = rng.gen());
        Ok(())
    }
}

fn bpr_learning() -> Outcome {
    let ds = GeneratorConfig::Block(BlockConfig::default())
        .generate(11)
        .map_err(|e| e.to_string())?;
    let training = TrainingConfig::default();
    let mut lines = Vec::new();
    for seed in [1u64, 2, 3] {
        let split = random_split(&ds, SplitRatios::default(), seed).map_err(|e| e.to_string())?;
        let train = split.train_matrix(&ds);
        let validation = split.validation_matrix(&ds);
        let mut random = 0.0;
        for s in 0..20u64 {
            let scorer = RandomScorer {
                n_items: ds.num_tracks(),
                seed: derive_seed(seed, Stream::Fit, &[s]),
            };
            random += validation_ndcg(&scorer, &train, &validation, 10, Parallelism::Parallel)
                .map_err(|e| e.to_string())?;
        }
        random /= 20.0;
        let ctx = FitContext {
            dataset: &ds,
            train: &train,
            validation: &validation,
            training: &training,
            seed,
            parallelism: Parallelism::Parallel,
        };
        let model = BprModel::fit(&ctx, &BprConfig::default(), None).map_err(|e| e.to_string())?;
        let ndcg = validation_ndcg(&model, &train, &validation, 10, Parallelism::Parallel)
            .map_err(|e| e.to_string())?;
        check(ndcg >= 2.0 * random, || {
            format!("seed {seed}: BPR NDCG@10 {ndcg:.4} < 2 x random {random:.4}")
        })?;
        lines.push(format!(
            "seed {seed}: {ndcg:.4} vs random {random:.4} (best epoch {})",
            model.report().best_epoch
        ));
    }
    Ok(lines.join("; "))
}

// ---------------------------------------------------------------- loop dynamics

fn loop_dynamics() -> Outcome {
    let ds = GeneratorConfig::CountrySkew(CountrySkewConfig::lfm_one_percent())
        .generate(2024)
        .map_err(|e| e.to_string())?;
    let us_tracks = ds.tracks().iter().filter(|t| t.country.is_us()).count() as f64
        / ds.num_tracks() as f64;
    let cfg = SimulationConfig {
        iterations: 20,
        seed: 2024,
        ..SimulationConfig::default()
    };
    let (records, _) = run_simulation(&ds, cfg).map_err(|e| e.to_string())?;
    let minority: Vec<usize> = ds
        .users()
        .iter()
        .enumerate()
        .filter(|(_, u)| !u.country.is_us() && !u.country.is_other())
        .map(|(i, _)| i)
        .collect();
    let values = |r: &IterationRecord, f: fn(&loopsim_core::sim::UserRecord) -> f64| -> Vec<f64> {
        minority.iter().map(|&u| f(&r.users[u])).collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (first, last) = (&records[0], records.last().unwrap());
    let (l0, l1) = (values(first, |r| r.prof_local), values(last, |r| r.prof_local));
    let (u0, u1) = (values(first, |r| r.prof_us), values(last, |r| r.prof_us));
    let tl = paired_t_test(&l0, &l1).map_err(|e| e.to_string())?;
    let tu = paired_t_test(&u0, &u1).map_err(|e| e.to_string())?;
    let (ml0, ml1, mu0, mu1) = (mean(&l0), mean(&l1), mean(&u0), mean(&u1));
    let summary = format!(
        "{} minority users, US track share {us_tracks:.3}: p_local {ml0:.4} -> {ml1:.4} ({:+.1}%, p={:.1e}), p_US {mu0:.4} -> {mu1:.4} ({:+.1}%, p={:.1e})",
        minority.len(),
        100.0 * (ml1 - ml0) / ml0,
        tl.p,
        100.0 * (mu1 - mu0) / mu0,
        tu.p
    );
    check(ml1 < ml0 && mu1 > mu0, || format!("wrong direction: {summary}"))?;
    check(tl.p < BONFERRONI_ALPHA && tu.p < BONFERRONI_ALPHA, || {
        format!("not significant at 0.05/12: {summary}")
    })?;
    Ok(summary)
}

// ---------------------------------------------------------------- bookkeeping

fn loop_bookkeeping() -> Outcome {
    let ds = GeneratorConfig::CountrySkew(CountrySkewConfig::lfm_one_percent())
        .generate(9)
        .map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for model in ["pop", "itemknn", "bpr"] {
        let cfg = SimulationConfig {
            iterations: 4,
            seed: 9,
            model: loopsim_core::recommend::ModelConfig::from_name(model).unwrap(),
            training: TrainingConfig {
                max_epochs: 15,
                ..TrainingConfig::default()
            },
            ..SimulationConfig::default()
        };
        let sim = Simulation::new(&ds, cfg.clone()).map_err(|e| e.to_string())?;
        let base = sim.baseline_record().map_err(|e| e.to_string())?;
        for r in &base.users {
            check(
                r.prof_country_jsd == 0.0 && r.prof_pop_jsd_current == 0.0 && r.prof_pop_jsd_frozen == 0.0,
                || format!("{model}: iteration-0 JSD not exactly 0 for user {}", r.user.0),
            )?;
        }
        let mut state = sim.initial().clone();
        let mut seen_hits = 0;
        let mut previous = None;
        for it in 1..=cfg.iterations {
            let out = sim.run_iteration(&state, it, previous.as_ref()).map_err(|e| e.to_string())?;
            for (u, list) in out.recommendations.iter().enumerate() {
                let user = UserIdx(u as u32);
                if let Some(list) = list {
                    seen_hits += list.entries.iter().filter(|e| state.has_seen(user, e.track)).count();
                }
                let grew = out.dataset.profile(user).len() - state.profile(user).len();
                let expected = usize::from(list.is_some());
                check(grew == expected, || {
                    format!("{model} it {it}: user {u} grew by {grew}, expected {expected}")
                })?;
            }
            let served = ds.num_users() - out.record.skipped_users;
            check(
                out.dataset.num_interactions() == state.num_interactions() + served,
                || format!("{model} it {it}: interaction count off"),
            )?;
            check(out.record.exclusion_violations == 0, || {
                format!("{model} it {it}: {} exclusion violations", out.record.exclusion_violations)
            })?;
            state = out.dataset;
            previous = Some(out.model);
        }
        check(seen_hits == 0, || format!("{model}: {seen_hits} seen items recommended"))?;
        lines.push(format!("{model}: {} interactions after {} iterations", state.num_interactions(), cfg.iterations));
    }
    Ok(format!("0 seen-item recommendations, +1 item per served user, iteration-0 JSD = 0 ({})", lines.join(", ")))
}

// ---------------------------------------------------------------- determinism & resume

fn read_outputs(dir: &Path) -> Result<Vec<Vec<u8>>, String> {
    [METRICS_FILE, USER_METRICS_FILE, ACCEPTED_FILE]
        .iter()
        .map(|f| std::fs::read(dir.join(f)).map_err(|e| e.to_string()))
        .collect()
}

fn determinism_and_resume() -> Outcome {
    let ds = GeneratorConfig::CountrySkew(CountrySkewConfig::lfm_one_percent())
        .generate(3)
        .map_err(|e| e.to_string())?;
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut lines = Vec::new();
    for model in ["pop", "itemknn", "bpr"] {
        let cfg = SimulationConfig {
            iterations: 5,
            seed: 17,
            checkpoint_every: Some(2),
            model: loopsim_core::recommend::ModelConfig::from_name(model).unwrap(),
            training: TrainingConfig {
                max_epochs: 10,
                ..TrainingConfig::default()
            },
            ..SimulationConfig::default()
        };
        let a = tmp.path().join(format!("{model}_a"));
        let b = tmp.path().join(format!("{model}_b"));
        let seq = tmp.path().join(format!("{model}_seq"));
        run_to_dir(&ds, cfg.clone(), &a).map_err(|e| e.to_string())?;
        run_to_dir(&ds, cfg.clone(), &b).map_err(|e| e.to_string())?;
        run_to_dir(
            &ds,
            SimulationConfig {
                parallelism: Parallelism::Sequential,
                ..cfg.clone()
            },
            &seq,
        )
        .map_err(|e| e.to_string())?;
        let out_a = read_outputs(&a)?;
        check(out_a == read_outputs(&b)?, || format!("{model}: repeated runs differ"))?;
        check(out_a == read_outputs(&seq)?, || format!("{model}: sequential run differs"))?;

        // Resume from the iteration-2 checkpoint of a copy whose outputs ran on.
        resume_in_dir(&b, Some(&checkpoint_dir(&b, 2)), cfg).map_err(|e| e.to_string())?;
        check(out_a == read_outputs(&b)?, || format!("{model}: resumed run differs"))?;
        lines.push(format!("{model} ok"));
    }
    Ok(format!(
        "repeat, sequential and resumed-from-iteration-2 outputs byte-identical ({})",
        lines.join(", ")
    ))
}

// ---------------------------------------------------------------- t-test oracle

#[derive(Deserialize)]
struct TTestCase {
    before: Vec<f64>,
    after: Vec<f64>,
    t: f64,
    p: f64,
    df: f64,
}

fn statistics_oracle() -> Outcome {
    let text = std::fs::read_to_string(fixture("ttest_reference.json")).map_err(|e| e.to_string())?;
    let cases: Vec<TTestCase> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let (mut worst_t, mut worst_p) = (0.0f64, 0.0f64);
    for (i, c) in cases.iter().enumerate() {
        let r = paired_t_test(&c.before, &c.after).map_err(|e| e.to_string())?;
        let dt = (r.t - c.t).abs() / c.t.abs().max(1.0);
        let dp = (r.p - c.p).abs();
        check(dt <= 1e-6 && dp <= 1e-6 && r.df == c.df, || {
            format!("case {i}: t {} vs {}, p {} vs {}", r.t, c.t, r.p, c.p)
        })?;
        worst_t = worst_t.max(dt);
        worst_p = worst_p.max(dp);
    }
    let first = paired_t_test(&cases[0].before, &cases[0].after).map_err(|e| e.to_string())?;
    check((first.t - 0.918).abs() < 1e-3 && (first.p - 0.455).abs() < 1e-3, || {
        format!("worked example t={} p={}", first.t, first.p)
    })?;
    Ok(format!(
        "{} cases, max t diff {worst_t:.1e}, max p diff {worst_p:.1e}; worked example t={:.3} p={:.3}",
        cases.len(),
        first.t,
        first.p
    ))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 8] = [
        ("JSD correctness", jsd_correctness),
        ("acceptance probabilities", acceptance_probability_oracle),
        ("model oracles", model_oracles),
        ("BPR learning sanity", bpr_learning),
        ("loop dynamics", loop_dynamics),
        ("loop bookkeeping", loop_bookkeeping),
        ("determinism & resume", determinism_and_resume),
        ("statistics oracle", statistics_oracle),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f)
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                println!("FAIL {name} ({secs:.1}s): {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

