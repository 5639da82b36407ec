use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn loopsim() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_loopsim"));
    c.env_remove("LOOPSIM_SEED").env("RUST_LOG", "warn");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn loopsim")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), stderr(o));
}

/// Writes the small shipped dataset into `dir`.
fn small_dataset(dir: &Path) -> PathBuf {
    let out = dir.join("small.tsv");
    assert_ok(&run(loopsim()
        .arg("gen-synthetic")
        .arg("--config")
        .arg(configs().join("generator_small.toml"))
        .arg("--out")
        .arg(&out)));
    out
}

fn simulate(dataset: &Path, run_dir: &Path, extra: &[&str]) -> Output {
    run(loopsim()
        .args(["simulate", "--model", "pop", "--iterations", "3"])
        .arg("--dataset")
        .arg(dataset)
        .arg("--run-dir")
        .arg(run_dir)
        .args(extra))
}

fn metric_iterations(run_dir: &Path) -> Vec<u32> {
    let text = std::fs::read_to_string(run_dir.join("metrics.csv")).unwrap();
    let mut its: Vec<u32> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    its.dedup();
    its
}

fn run_outputs(run_dir: &Path) -> Vec<Vec<u8>> {
    ["metrics.csv", "user_metrics.csv", "accepted.tsv"]
        .iter()
        .map(|f| std::fs::read(run_dir.join(f)).unwrap())
        .collect()
}

#[test]
fn generated_dataset_round_trips_and_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |name: &str, seed: Option<&str>, env: Option<&str>| {
        let out = dir.path().join(name);
        let mut c = loopsim();
        c.args(["gen-synthetic", "--preset", "block", "--out"]).arg(&out);
        if let Some(s) = seed {
            c.args(["--seed", s]);
        }
        if let Some(e) = env {
            c.env("LOOPSIM_SEED", e);
        }
        assert_ok(&run(&mut c));
        std::fs::read(out).unwrap()
    };
    let a = gen("a.tsv", Some("7"), None);
    assert_eq!(a, gen("b.tsv", Some("7"), None));
    assert_ne!(a, gen("c.tsv", Some("8"), None));
    assert_eq!(a, gen("env.tsv", None, Some("7")));

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "user_id\ttrack_id\tuser_country\ttrack_country\tcount"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 5));
    let users: std::collections::BTreeSet<&str> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(users.len(), 200);
}

#[test]
fn shipped_configs_parse() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["generator_lfm.toml", "generator_block.toml", "generator_small.toml"] {
        let out = dir.path().join(name.replace(".toml", ".tsv"));
        assert_ok(&run(loopsim()
            .arg("gen-synthetic")
            .arg("--config")
            .arg(configs().join(name))
            .arg("--out")
            .arg(&out)));
    }
    let o = run(loopsim()
        .arg("simulate")
        .arg("--config")
        .arg(configs().join("simulate.toml"))
        .arg("--dataset")
        .arg(dir.path().join("generator_small.tsv"))
        .args(["--iterations", "1"])
        .arg("--run-dir")
        .arg(dir.path().join("run")));
    assert_ok(&o);
    assert_eq!(metric_iterations(&dir.path().join("run")), vec![0, 1]);
}

#[test]
fn simulate_writes_groups_config_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small_dataset(dir.path());
    let run_dir = dir.path().join("run");
    assert_ok(&simulate(&ds, &run_dir, &["--seed", "3"]));
    assert_eq!(metric_iterations(&run_dir), vec![0, 1, 2, 3]);

    let config = std::fs::read_to_string(run_dir.join("config.toml")).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"].as_str().unwrap(), config);
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["status"], "completed");
    assert!(config.contains("iterations = 3"));

    let report_dir = dir.path().join("report");
    let o = run(loopsim()
        .arg("report")
        .arg("--metrics")
        .arg(run_dir.join("metrics.csv"))
        .arg("--dataset")
        .arg(&ds)
        .arg("--out")
        .arg(&report_dir));
    assert_ok(&o);
    assert!(String::from_utf8_lossy(&o.stdout).contains("after iteration 3"));
    for f in ["summary.csv", "country_jsd.csv", "country_deltas.csv", "proportion_series.csv", "jsd_series.csv"] {
        assert!(report_dir.join(f).is_file(), "{f}");
    }
}

#[test]
fn seed_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small_dataset(dir.path());
    let run_dir = dir.path().join("run");
    let o = run(loopsim()
        .env("LOOPSIM_SEED", "9")
        .args(["simulate", "--iterations", "1"])
        .arg("--dataset")
        .arg(&ds)
        .arg("--run-dir")
        .arg(&run_dir));
    assert_ok(&o);
    let manifest = std::fs::read_to_string(run_dir.join("manifest.json")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(manifest["seed"], 9);

    // The same seed given as a flag reproduces the run.
    let flag_dir = dir.path().join("flag");
    assert_ok(&run(loopsim()
        .args(["simulate", "--iterations", "1", "--seed", "9"])
        .arg("--dataset")
        .arg(&ds)
        .arg("--run-dir")
        .arg(&flag_dir)));
    assert_eq!(run_outputs(&run_dir), run_outputs(&flag_dir));
}

#[test]
fn resume_reproduces_uninterrupted_run() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small_dataset(dir.path());
    let run_dir = dir.path().join("run");
    assert_ok(&simulate(&ds, &run_dir, &["--checkpoint-every", "1"]));
    let full = run_outputs(&run_dir);

    let o = run(loopsim()
        .arg("simulate")
        .arg("--resume")
        .arg(run_dir.join("checkpoints/iter_0001")));
    assert_ok(&o);
    assert_eq!(run_outputs(&run_dir), full);
    let manifest = std::fs::read_to_string(run_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("iter_0001"));

    // Options that would change the run are refused.
    let o = run(loopsim()
        .args(["simulate", "--iterations", "9", "--resume"])
        .arg(run_dir.join("checkpoints/iter_0001")));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn truncated_metrics_fail_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let ds = small_dataset(dir.path());
    let run_dir = dir.path().join("run");
    assert_ok(&simulate(&ds, &run_dir, &[]));
    let path = run_dir.join("metrics.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let cut = text.lines().position(|l| l.starts_with("3,")).unwrap() + 1;
    let kept: String = text.lines().take(cut).map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, kept).unwrap();

    let o = run(loopsim()
        .arg("report")
        .arg("--metrics")
        .arg(&path)
        .arg("--dataset")
        .arg(&ds)
        .arg("--out")
        .arg(dir.path().join("report")));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("last good iteration: 2"), "{}", stderr(&o));
}

#[test]
fn bad_input_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.tsv");
    let o = simulate(&missing, &dir.path().join("r1"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.tsv"), "{}", stderr(&o));

    let ds = small_dataset(dir.path());
    let o = simulate(&ds, &dir.path().join("r2"), &["--set", "split.train=0.9"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = simulate(&ds, &dir.path().join("r3"), &["--set", "no_such_key=1"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = simulate(&ds, &dir.path().join("r4"), &["--k", "0"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let bad = dir.path().join("bad.tsv");
    std::fs::write(&bad, "user_id\ttrack_id\tuser_country\ttrack_country\tcount\na\tt\tUS\n").unwrap();
    let o = simulate(&bad, &dir.path().join("r5"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let o = run(loopsim()
        .args(["gen-synthetic", "--preset", "nope", "--out"])
        .arg(dir.path().join("x.tsv")));
    assert_eq!(o.status.code(), Some(2));
}
