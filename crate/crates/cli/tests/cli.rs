//! Command workflows: config handling, file formats, determinism, and the
//! missing-data contract at the CLI level.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use pompkit_cli::commands::{cmd_mif2, cmd_pfilter, cmd_profile, cmd_simulate};
use pompkit_cli::config::RunConfig;
use pompkit_cli::csvio::read_data;
use pompkit_cli::exit_code;
use tempfile::TempDir;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

fn sir_config(dir: &Path, extra: &str) -> RunConfig {
    let out = dir.join("out").display().to_string();
    let body = format!(
        r#"
model = "sir"
seed = 20258123
out = "{out}"
data = "{out}/data.csv"
method = "tauleap"
tau = 0.02

[params.beta]
value = 1.0
estimate = true
bounds = [0.1, 3.0]

[params.gamma]
value = 0.5
estimate = true
bounds = [0.05, 2.0]

[params.pop]
value = 10000.0

[params.i0]
value = 1.0

[params.kappa]
value = 1.0

[simulate]
weeks = 50
method = "gillespie"

[pfilter]
particles = 100
replicates = 3

[mif2]
iterations = 3
particles = 50
starts = 2
eval_replicates = 2
eval_particles = 60
{extra}
"#
    );
    RunConfig::load(&write_config(dir, &body)).unwrap()
}

#[test]
fn simulate_writes_deterministic_data() {
    let dir = TempDir::new().unwrap();
    let config = sir_config(dir.path(), "");
    cmd_simulate(&config).unwrap();
    let data_path = config.out.join("data.csv");
    let first = fs::read(&data_path).unwrap();
    let states_first = fs::read(config.out.join("states.csv")).unwrap();

    // 50 observations plus header
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 51);

    cmd_simulate(&config).unwrap();
    assert_eq!(first, fs::read(&data_path).unwrap());
    assert_eq!(states_first, fs::read(config.out.join("states.csv")).unwrap());

    // ingestion round-trips exactly
    let sim = cmd_simulate(&config).unwrap();
    let data = read_data(&data_path).unwrap();
    assert_eq!(data.times(), sim.times.as_slice());
    let obs: Vec<Option<u64>> = sim.observations.iter().map(|&y| Some(y)).collect();
    assert_eq!(data.values(), obs.as_slice());
}

#[test]
fn zero_transmission_gives_all_zero_cases() {
    let dir = TempDir::new().unwrap();
    let mut config = sir_config(dir.path(), "");
    config.params.get_mut("beta").unwrap().value = 0.0;
    config.params.get_mut("beta").unwrap().estimate = Some(false);
    let sim = cmd_simulate(&config).unwrap();
    assert!(sim.observations.iter().all(|&y| y == 0));
}

#[test]
fn config_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    // unknown key
    let err = RunConfig::load(&write_config(dir.path(), "model = \"sir\"\nseedling = 1"))
        .unwrap_err();
    assert_eq!(exit_code(&err), 2);
    // missing parameter value
    let body = r#"
model = "sir"
seed = 1
out = "x"
[params.beta]
value = 1.0
estimate = true
bounds = [0.1, 3.0]
"#;
    let config = RunConfig::load(&write_config(dir.path(), body)).unwrap();
    let err = config.build_model().unwrap_err();
    assert!(err.to_string().contains("params.gamma"), "{err}");
    assert_eq!(exit_code(&err), 2);
    // estimated parameter without bounds
    let dir2 = TempDir::new().unwrap();
    let mut config = sir_config(dir2.path(), "");
    config.params.get_mut("beta").unwrap().bounds = None;
    let model = config.build_model().unwrap();
    let err = config.hypercube(&model).unwrap_err();
    assert!(err.to_string().contains("params.beta.bounds"), "{err}");
}

#[test]
fn corrupt_data_rows_are_reported_with_line_numbers() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "time,cases\n1.0,3\n2.0,oops\n").unwrap();
    let err = read_data(&path).unwrap_err();
    assert!(err.to_string().contains("row 3"), "{err}");
    assert_eq!(exit_code(&err), 3);

    fs::write(&path, "when,cases\n1.0,3\n").unwrap();
    let err = read_data(&path).unwrap_err();
    assert!(err.to_string().contains("expected header"), "{err}");
}

#[test]
fn pfilter_writes_results_and_ledger() {
    let dir = TempDir::new().unwrap();
    let config = sir_config(dir.path(), "");
    cmd_simulate(&config).unwrap();
    let summary = cmd_pfilter(&config).unwrap();
    assert_eq!(summary.logliks.len(), 3);

    let result = fs::read_to_string(config.out.join("pfilter_result.csv")).unwrap();
    let lines: Vec<&str> = result.lines().collect();
    assert_eq!(lines[0], "replicate,loglik,nfail");
    assert_eq!(lines.len(), 1 + 3 + 2); // header, replicates, mean, se
    assert!(lines[4].starts_with("mean,"));
    assert!(lines[5].starts_with("se,"));

    let ledger = fs::read_to_string(config.out.join("ledger.csv")).unwrap();
    let rows: Vec<&str> = ledger.lines().collect();
    assert!(rows[0].starts_with("timestamp,model,workflow,seed,"));
    assert_eq!(rows.len(), 2);
    assert!(rows[1].contains(",pfilter,"));

    // appends accumulate, never overwrite
    cmd_pfilter(&config).unwrap();
    let ledger = fs::read_to_string(config.out.join("ledger.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 3);
}

/// Blanking an observation (empty value, time kept) zeroes exactly that
/// conditional log-likelihood and, on the deterministic process, leaves
/// every other contribution untouched. The time must stay in the file:
/// dropping the whole row would merge two reporting intervals, so the next
/// count would be compared against two weeks of accumulated incidence.
#[test]
fn missing_data_contract_at_the_command_level() {
    let dir = TempDir::new().unwrap();
    let mut config = sir_config(dir.path(), "");
    config.method = "skeleton".into();
    cmd_simulate(&config).unwrap();

    let data_path = config.out.join("data.csv");
    let original = fs::read_to_string(&data_path).unwrap();

    let cond = |config: &RunConfig| -> Vec<(String, f64)> {
        cmd_pfilter(config).unwrap();
        let text = fs::read_to_string(config.out.join("pfilter_cond.csv")).unwrap();
        text.lines()
            .skip(1)
            .filter(|l| l.starts_with("1,"))
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                (f[2].to_string(), f[3].parse::<f64>().unwrap())
            })
            .collect()
    };

    let full = cond(&config);
    assert_eq!(full.len(), 50);

    // blank observation 25: empty cases field, time kept
    let mut lines: Vec<String> = original.lines().map(|l| l.to_string()).collect();
    let time = lines[25].split(',').next().unwrap().to_string();
    lines[25] = format!("{time},");
    fs::write(&data_path, lines.join("\n") + "\n").unwrap();

    let blanked = cond(&config);
    assert_eq!(blanked.len(), 50);
    assert_eq!(blanked[24].1, 0.0, "blanked observation contributes zero");
    for i in 0..50 {
        if i != 24 {
            assert_eq!(full[i], blanked[i], "observation {}", i + 1);
        }
    }
}

#[test]
fn mif2_outputs_and_worker_independence() {
    let dir = TempDir::new().unwrap();
    let config = sir_config(dir.path(), "");
    cmd_simulate(&config).unwrap();

    let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let pool3 = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    pool1.install(|| cmd_mif2(&config).unwrap());
    let traces1 = fs::read(config.out.join("traces.csv")).unwrap();
    let cand1 = fs::read(config.out.join("candidates.csv")).unwrap();

    // 2 starts x 3 iterations plus header
    assert_eq!(traces1.iter().filter(|&&b| b == b'\n').count(), 7);

    pool3.install(|| cmd_mif2(&config).unwrap());
    assert_eq!(traces1, fs::read(config.out.join("traces.csv")).unwrap());
    assert_eq!(cand1, fs::read(config.out.join("candidates.csv")).unwrap());

    let text = String::from_utf8(cand1).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rank,start,mean_loglik,se,nfail,param_beta,param_gamma,param_pop,param_i0,param_kappa"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn one_point_profile_grid_warns_and_writes_empty_interval() {
    let dir = TempDir::new().unwrap();
    let extra = r#"
[profile]
targets = ["beta"]
starts = 1
iterations = 2
particles = 40
eval_replicates = 2
eval_particles = 40

[profile.grid.beta]
from = 1.0
to = 1.0
points = 1
"#;
    let config = sir_config(dir.path(), extra);
    cmd_simulate(&config).unwrap();
    let outputs = cmd_profile(&config).unwrap();
    assert_eq!(outputs[0].points.len(), 1);
    assert!(outputs[0].mcap.is_none());

    let profile = fs::read_to_string(config.out.join("profile_beta.csv")).unwrap();
    assert_eq!(profile.lines().count(), 2);
    let mcap = fs::read_to_string(config.out.join("mcap_beta.csv")).unwrap();
    assert_eq!(mcap.lines().count(), 1, "header only; no interval");
    // profile evaluations land in the ledger
    let ledger = fs::read_to_string(config.out.join("ledger.csv")).unwrap();
    assert!(ledger.lines().any(|l| l.contains("profile:beta")));
}

#[test]
fn ledger_appends_are_atomic_under_parallelism() {
    use pompkit_cli::ledger::{ledger_append, LedgerRecord};
    use rayon::prelude::*;

    let dir = TempDir::new().unwrap();
    let path = dir.path().join("ledger.csv");
    let model = pompkit_core::sir_model(pompkit_core::SimMethod::TauLeap, 0.1).unwrap();
    let params = pompkit_core::models::sir::sir_defaults(model.space());
    (0..100u64).into_par_iter().for_each(|i| {
        let record = LedgerRecord::now("sir", "pfilter", i, 10, 2, -100.0 - i as f64, 0.5, params.clone());
        ledger_append(&record, &path).unwrap();
    });
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 101);
    assert!(lines[0].starts_with("timestamp,"));
    let n_fields = lines[0].split(',').count();
    let mut seen_seeds = Vec::new();
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), n_fields, "intact row: {row}");
        assert_eq!(fields[1], "sir");
        seen_seeds.push(fields[3].parse::<u64>().unwrap());
    }
    seen_seeds.sort_unstable();
    assert_eq!(seen_seeds, (0..100).collect::<Vec<_>>());
}

#[test]
fn binary_smoke_test_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let body = format!(
        r#"
model = "sir"
seed = 7
out = "{}"
data = "{}/data.csv"
tau = 0.05

[params.beta]
value = 1.0
estimate = true
bounds = [0.1, 3.0]

[params.gamma]
value = 0.5
estimate = true
bounds = [0.05, 2.0]

[params.pop]
value = 500.0

[params.i0]
value = 1.0

[params.kappa]
value = 1.0

[simulate]
weeks = 10
"#,
        out.display(),
        out.display()
    );
    let config_path = write_config(dir.path(), &body);
    let bin = env!("CARGO_BIN_EXE_pompkit");

    let ok = Command::new(bin)
        .args(["simulate", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(out.join("data.csv").exists());

    // pfilter on missing data: data error, exit 3
    fs::remove_file(out.join("data.csv")).unwrap();
    let missing = Command::new(bin)
        .args(["pfilter", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(3));

    // broken config: exit 2
    let broken = write_config(&dir.path().join("."), "model = \"sir\"\n");
    let bad = Command::new(bin)
        .args(["mif2", "--config"])
        .arg(&broken)
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
