//! `loopsim`: generate datasets, run feedback-loop simulations, and build
//! report tables from their outputs.

mod config;
mod failure;
mod manifest;

use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use loopsim_core::data::synthetic::{BlockConfig, CountrySkewConfig, GeneratorConfig};
use loopsim_core::data::{ingest, write_interactions};
use loopsim_core::sim::{
    final_report, read_metrics_csv, read_records, resume_in_dir, run_to_dir, CHECKPOINTS_DIR,
    METRICS_FILE, USER_METRICS_FILE, ACCEPTED_FILE,
};

use config::{parse_assignment, RunConfig};
use failure::Failure;
use manifest::{file_sha256, now, sha256_hex, DatasetInfo, Manifest, Outputs, CONFIG_FILE};

#[derive(Parser)]
#[command(name = "loopsim", version, about = "Feedback-loop simulator for music recommenders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic interactions file.
    GenSynthetic(GenArgs),
    /// Run the feedback loop and write a run directory.
    Simulate(SimulateArgs),
    /// Build summary tables and figure data from a run's metrics.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Generator config (TOML or JSON). In TOML, a `[generator]` table is
    /// used if present.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in generator: `lfm` or `block`.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// pop, itemknn, bpr or fixture.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    iterations: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Write into this directory instead of `<output_dir>/<timestamp>-<hash>`.
    #[arg(long)]
    run_dir: Option<PathBuf>,
    #[arg(long)]
    checkpoint_every: Option<u32>,
    /// Run on the current thread only.
    #[arg(long)]
    sequential: bool,
    /// Any config key, e.g. `--set bpr.dim=32`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Continue from a checkpoint directory of an earlier run. The run's
    /// own config is used; other options are rejected.
    #[arg(long, value_name = "CHECKPOINT")]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// `metrics.csv` of a run; `user_metrics.csv` and `accepted.tsv` are read
    /// from the same directory.
    #[arg(long)]
    metrics: PathBuf,
    /// The run's input interactions file.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the run's `config.toml` when present.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenSynthetic(a) => gen_synthetic(a),
        Command::Simulate(a) => simulate(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn generator_from_table(mut table: toml::Table) -> Result<(GeneratorConfig, Option<u64>), Failure> {
    if let Some(toml::Value::Table(inner)) = table.remove("generator") {
        let seed = table.get("seed").and_then(|v| v.as_integer());
        let (g, inner_seed) = generator_from_table(inner)?;
        return Ok((g, inner_seed.or(seed.map(|s| s as u64))));
    }
    let seed = table
        .remove("seed")
        .map(|v| {
            v.as_integer()
                .map(|s| s as u64)
                .ok_or_else(|| Failure::config("seed must be an integer"))
        })
        .transpose()?;
    if let Some(p) = table.remove("preset") {
        let name = p
            .as_str()
            .ok_or_else(|| Failure::config("preset must be a string"))?;
        return Ok((preset(name)?, seed));
    }
    let g: GeneratorConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Failure::config(format!("generator config: {e}")))?;
    Ok((g, seed))
}

fn preset(name: &str) -> Result<GeneratorConfig, Failure> {
    match name {
        "lfm" => Ok(GeneratorConfig::CountrySkew(CountrySkewConfig::lfm_one_percent())),
        "block" => Ok(GeneratorConfig::Block(BlockConfig::default())),
        other => Err(Failure::config(format!(
            "unknown preset {other:?} (expected lfm or block)"
        ))),
    }
}

fn gen_synthetic(a: GenArgs) -> Result<(), Failure> {
    let (generator, file_seed) = match (&a.config, &a.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::config(format!("cannot read config {}: {e}", path.display()))
            })?;
            if path.extension().is_some_and(|e| e == "json") {
                let g: GeneratorConfig = serde_json::from_str(&text)
                    .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
                (g, None)
            } else {
                let table: toml::Table = toml::from_str(&text)
                    .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
                generator_from_table(table)?
            }
        }
        (None, Some(name)) => (preset(name)?, None),
        (None, None) => return Err(Failure::config("give --config or --preset")),
    };
    let env_seed = std::env::var(config::SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok());
    let seed = a.seed.or(file_seed).or(env_seed).unwrap_or(42);
    let ds = generator.generate(seed)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::io(format!("cannot create {}: {e}", dir.display())))?;
    }
    let f = std::fs::File::create(&a.out)
        .map_err(|e| Failure::io(format!("cannot create {}: {e}", a.out.display())))?;
    write_interactions(&ds, BufWriter::new(f))
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", a.out.display())))?;
    log::info!(
        "wrote {} users, {} tracks, {} interactions to {}",
        ds.num_users(),
        ds.num_tracks(),
        ds.num_interactions(),
        a.out.display()
    );
    Ok(())
}

fn simulate_overrides(a: &SimulateArgs) -> Result<Vec<(String, toml::Value)>, Failure> {
    use toml::Value;
    let mut o = Vec::new();
    let path = |p: &Path| Value::String(p.display().to_string());
    if let Some(v) = &a.dataset {
        o.push(("dataset".into(), path(v)));
    }
    if let Some(v) = &a.model {
        o.push(("model".into(), Value::String(v.clone())));
    }
    if let Some(v) = a.iterations {
        o.push(("iterations".into(), Value::Integer(v.into())));
    }
    if let Some(v) = a.seed {
        let v = i64::try_from(v).map_err(|_| Failure::config("seed must fit in i64"))?;
        o.push(("seed".into(), Value::Integer(v)));
    }
    if let Some(v) = a.k {
        o.push(("k".into(), Value::Integer(v as i64)));
    }
    if let Some(v) = a.alpha {
        o.push(("alpha".into(), Value::Float(v)));
    }
    if let Some(v) = &a.output_dir {
        o.push(("output_dir".into(), path(v)));
    }
    if let Some(v) = a.checkpoint_every {
        o.push(("checkpoint_every".into(), Value::Integer(v.into())));
    }
    if a.sequential {
        o.push(("parallel".into(), Value::Boolean(false)));
    }
    for s in &a.set {
        o.push(parse_assignment(s)?);
    }
    Ok(o)
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    if let Some(ckpt) = &a.resume {
        return resume(&a, ckpt);
    }
    let cfg = config::load(a.config.as_deref(), &simulate_overrides(&a)?)?;
    let sim_cfg = cfg.simulation()?;
    let dataset = cfg
        .dataset
        .clone()
        .ok_or_else(|| Failure::config("no dataset given (set `dataset` or pass --dataset)"))?;
    if !dataset.is_file() {
        return Err(Failure::config(format!(
            "dataset not found: {}",
            dataset.display()
        )));
    }

    let snapshot = cfg.to_toml();
    let config_sha256 = sha256_hex(snapshot.as_bytes());
    let run_dir = match &a.run_dir {
        Some(d) => d.clone(),
        None => cfg.output_dir.join(format!(
            "{}-{}",
            chrono::Utc::now().format("%Y%m%dT%H%M%SZ"),
            &config_sha256[..8]
        )),
    };
    let ds = ingest(&dataset, &cfg.ingest)?;
    std::fs::create_dir_all(&run_dir)
        .map_err(|e| Failure::io(format!("cannot create {}: {e}", run_dir.display())))?;
    let config_path = run_dir.join(CONFIG_FILE);
    std::fs::write(&config_path, &snapshot)
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", config_path.display())))?;

    let mut manifest = Manifest {
        tool: "loopsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: snapshot,
        config_sha256,
        seed: sim_cfg.seed,
        dataset: DatasetInfo {
            path: dataset.clone(),
            sha256: file_sha256(&dataset)?,
            users: ds.num_users(),
            tracks: ds.num_tracks(),
            interactions: ds.num_interactions(),
        },
        started_at: now(),
        finished_at: None,
        status: "running".into(),
        error: None,
        resumed_from: Vec::new(),
        outputs: Outputs {
            config: CONFIG_FILE.into(),
            metrics: METRICS_FILE.into(),
            user_metrics: USER_METRICS_FILE.into(),
            accepted: ACCEPTED_FILE.into(),
            checkpoints: CHECKPOINTS_DIR.into(),
        },
    };
    manifest.write(&run_dir)?;
    log::info!(
        "run directory {} ({} users, {} tracks, {} interactions)",
        run_dir.display(),
        ds.num_users(),
        ds.num_tracks(),
        ds.num_interactions()
    );

    let result = run_to_dir(&ds, sim_cfg, &run_dir)
        .map(|_| ())
        .map_err(Failure::from);
    manifest.finish(&result);
    manifest.write(&run_dir)?;
    result?;
    println!("{}", run_dir.display());
    Ok(())
}

fn resume(a: &SimulateArgs, checkpoint: &Path) -> Result<(), Failure> {
    let changes_config = a.config.is_some()
        || a.dataset.is_some()
        || a.model.is_some()
        || a.iterations.is_some()
        || a.seed.is_some()
        || a.k.is_some()
        || a.alpha.is_some()
        || a.output_dir.is_some()
        || a.checkpoint_every.is_some()
        || a.sequential
        || !a.set.is_empty();
    if changes_config {
        return Err(Failure::config(
            "--resume uses the run's own config.toml; other options cannot be combined with it",
        ));
    }
    if !checkpoint.is_dir() {
        return Err(Failure::config(format!(
            "checkpoint not found: {}",
            checkpoint.display()
        )));
    }
    let run_dir = match &a.run_dir {
        Some(d) => d.clone(),
        None => checkpoint
            .parent()
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .ok_or_else(|| Failure::config("cannot locate the run directory of the checkpoint"))?,
    };
    let cfg = config::load(Some(&run_dir.join(CONFIG_FILE)), &[])?;
    let sim_cfg = cfg.simulation()?;
    let mut manifest = Manifest::read(&run_dir)?;
    manifest.resumed_from.push(checkpoint.to_path_buf());
    manifest.status = "running".into();
    manifest.finished_at = None;
    manifest.write(&run_dir)?;

    let result = resume_in_dir(&run_dir, Some(checkpoint), sim_cfg)
        .map(|_| ())
        .map_err(Failure::from);
    manifest.finish(&result);
    manifest.write(&run_dir)?;
    result?;
    println!("{}", run_dir.display());
    Ok(())
}

fn report(a: ReportArgs) -> Result<(), Failure> {
    let run_dir = a
        .metrics
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let config_path = a.config.clone().or_else(|| {
        let p = run_dir.join(CONFIG_FILE);
        p.is_file().then_some(p)
    });
    let overrides = a
        .set
        .iter()
        .map(|s| parse_assignment(s))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg: RunConfig = config::load(config_path.as_deref(), &overrides)?;
    if !a.dataset.is_file() {
        return Err(Failure::config(format!(
            "dataset not found: {}",
            a.dataset.display()
        )));
    }
    let ds = ingest(&a.dataset, &cfg.ingest)?;
    let table = read_metrics_csv(&a.metrics)?;
    let records = read_records(&run_dir, &ds)?;
    let report = final_report(&records, &ds, table.model(), &cfg.report_options())?;
    report.write_to(&a.out)?;

    println!(
        "{} after iteration {}:",
        report.model, report.final_iteration
    );
    for r in &report.population {
        println!(
            "  {:<16} {:>9.4} -> {:>9.4}  delta {:>8}%{}",
            r.metric,
            r.baseline,
            r.value,
            r.delta_percent
                .map(|d| format!("{d:.1}"))
                .unwrap_or_else(|| "n/a".into()),
            if r.significant() { " *" } else { "" }
        );
    }
    println!("  prof_country_jsd {:.4}", report.jsd_prof);
    if let Some(n) = report.ndcg_first {
        println!("  ndcg_first       {n:.4}");
    }
    for note in &report.notes {
        println!("  note: {note}");
    }
    Ok(())
}
