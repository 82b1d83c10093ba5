//! The four workflows: simulate, pfilter, mif2, profile.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use pompkit_core::rng::tag;
use pompkit_core::{
    derive_seed, evaluate_candidates, mcap, mif2_multi_start, particle_filter, profile_likelihood,
    simulate_path, stream, CandidateEval, Error, McapResult, Mif2Run, ParamVector,
    PfilterSettings, ProfilePoint, Result, SimulatedPath, TimeSeries,
};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::csvio::{fmt_f64, read_data, write_data, write_states, CsvWriter};
use crate::ledger::{ledger_append, LedgerRecord};

// Workflow tags separating the stream namespaces of the commands.
const WF_SIMULATE: u64 = 100;
const WF_PFILTER: u64 = 101;
const WF_MIF2: u64 = 102;
const WF_PROFILE: u64 = 103;

fn out_path(config: &RunConfig, name: &str) -> PathBuf {
    config.out.join(name)
}

fn ledger_path(config: &RunConfig) -> PathBuf {
    out_path(config, "ledger.csv")
}

/// Simulates one realization and writes `data.csv` and `states.csv`.
pub fn cmd_simulate(config: &RunConfig) -> Result<SimulatedPath> {
    let model = config.build_simulation_model()?;
    let params = config.param_vector(&model)?;
    let grid = TimeSeries::weekly_grid(config.simulate.weeks);
    let seed = derive_seed(config.seed, &[WF_SIMULATE]);
    let sim = simulate_path(&model, &params, grid.times(), seed)?;
    let data = TimeSeries::new(
        sim.times.clone(),
        sim.observations.iter().map(|&y| Some(y)).collect(),
    )?;
    write_data(&out_path(config, "data.csv"), &data)?;
    write_states(&out_path(config, "states.csv"), &model.compartments, &sim)?;
    Ok(sim)
}

#[derive(Debug, Clone)]
pub struct PfilterSummary {
    pub logliks: Vec<f64>,
    pub nfails: Vec<usize>,
    pub mean_loglik: f64,
    pub se: f64,
}

/// Replicated particle filters at the configured parameter point; writes
/// `pfilter_result.csv` (per replicate plus summary rows) and
/// `pfilter_cond.csv` (per-observation diagnostics), and appends one ledger
/// record.
pub fn cmd_pfilter(config: &RunConfig) -> Result<PfilterSummary> {
    let model = config.build_model()?;
    let params = config.param_vector(&model)?;
    let data = read_data(&config.data_path()?)?;
    let settings = PfilterSettings {
        particles: config.pfilter.particles,
        tol: config.pfilter.tol,
        scheme: config.resampling_scheme()?,
        track_filter_means: false,
        parallel_particles: false,
    };
    let seed = derive_seed(config.seed, &[WF_PFILTER]);
    let replicates = config.pfilter.replicates.max(1);
    let results: Result<Vec<_>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            particle_filter(
                &model,
                &data,
                &params,
                &settings,
                derive_seed(seed, &[tag::EVAL, r as u64]),
            )
        })
        .collect();
    let results = results?;

    let logliks: Vec<f64> = results.iter().map(|r| r.loglik).collect();
    let nfails: Vec<usize> = results.iter().map(|r| r.n_failures()).collect();
    let n = logliks.len() as f64;
    let mean = logliks.iter().sum::<f64>() / n;
    let se = if logliks.len() > 1 {
        let var = logliks.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };

    let mut w = CsvWriter::create(&out_path(config, "pfilter_result.csv"), &["replicate", "loglik", "nfail"])?;
    for (i, (ll, nf)) in logliks.iter().zip(&nfails).enumerate() {
        w.row(&[(i + 1).to_string(), fmt_f64(*ll), nf.to_string()])?;
    }
    w.row(&["mean".into(), fmt_f64(mean), nfails.iter().sum::<usize>().to_string()])?;
    w.row(&["se".into(), fmt_f64(se), String::new()])?;
    w.finish()?;

    let mut w = CsvWriter::create(
        &out_path(config, "pfilter_cond.csv"),
        &["replicate", "n", "time", "cond_loglik", "ess"],
    )?;
    for (i, r) in results.iter().enumerate() {
        for (j, (c, e)) in r.cond_loglik.iter().zip(&r.ess).enumerate() {
            w.row(&[
                (i + 1).to_string(),
                (j + 1).to_string(),
                fmt_f64(data.time(j)),
                fmt_f64(*c),
                fmt_f64(*e),
            ])?;
        }
    }
    w.finish()?;

    ledger_append(
        &LedgerRecord::now(
            &model.name,
            "pfilter",
            config.seed,
            settings.particles,
            replicates,
            mean,
            se,
            params,
        ),
        &ledger_path(config),
    )?;
    Ok(PfilterSummary {
        logliks,
        nfails,
        mean_loglik: mean,
        se,
    })
}

#[derive(Debug)]
pub struct Mif2Outputs {
    pub runs: Vec<Mif2Run>,
    pub evals: Vec<CandidateEval>,
}

/// Multi-start iterated filtering: writes `traces.csv` (per start and
/// iteration) and `candidates.csv` (ranked by replicated-filter
/// evaluation), and appends one ledger record per candidate.
pub fn cmd_mif2(config: &RunConfig) -> Result<Mif2Outputs> {
    let model = config.build_model()?;
    let base = config.param_vector(&model)?;
    let data = read_data(&config.data_path()?)?;
    let settings = config.mif2_settings(&model)?;
    let hypercube = config.hypercube(&model)?;
    let seed = derive_seed(config.seed, &[WF_MIF2]);

    let runs = mif2_multi_start(
        &model,
        &data,
        &base,
        &hypercube,
        &settings,
        config.mif2.starts,
        seed,
    )?;

    let estimated_names = runs
        .first()
        .map(|r| r.result.estimated_names.clone())
        .unwrap_or_default();
    let mut header: Vec<&str> = vec!["start", "iteration", "loglik", "nfail"];
    for name in &estimated_names {
        header.push(name);
    }
    let mut w = CsvWriter::create(&out_path(config, "traces.csv"), &header)?;
    for run in &runs {
        for m in 0..run.result.loglik_trace.len() {
            let mut row = vec![
                (run.start_index + 1).to_string(),
                (m + 1).to_string(),
                fmt_f64(run.result.loglik_trace[m]),
                run.result.nfail_trace[m].to_string(),
            ];
            row.extend(run.result.param_traces[m].iter().map(|v| fmt_f64(*v)));
            w.row(&row)?;
        }
    }
    w.finish()?;

    let candidates: Vec<ParamVector> = runs.iter().map(|r| r.result.estimate.clone()).collect();
    let evals = evaluate_candidates(
        &candidates,
        &model,
        &data,
        config.mif2.eval_replicates,
        config.mif2.eval_particles,
        config.mif2.tol,
        derive_seed(seed, &[tag::EVAL]),
    )?;

    let mut header: Vec<String> = vec![
        "rank".into(),
        "start".into(),
        "mean_loglik".into(),
        "se".into(),
        "nfail".into(),
    ];
    for d in model.space().defs() {
        header.push(format!("param_{}", d.name));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut w = CsvWriter::create(&out_path(config, "candidates.csv"), &header_refs)?;
    for (rank, eval) in evals.iter().enumerate() {
        let mut row = vec![
            (rank + 1).to_string(),
            (eval.candidate_index + 1).to_string(),
            fmt_f64(eval.mean_loglik),
            fmt_f64(eval.se),
            eval.total_failures.to_string(),
        ];
        row.extend(eval.params.values().iter().map(|v| fmt_f64(*v)));
        w.row(&row)?;
    }
    w.finish()?;

    for eval in &evals {
        ledger_append(
            &LedgerRecord::now(
                &model.name,
                "mif2",
                config.seed,
                config.mif2.eval_particles,
                config.mif2.eval_replicates,
                eval.mean_loglik,
                eval.se,
                eval.params.clone(),
            ),
            &ledger_path(config),
        )?;
    }
    Ok(Mif2Outputs { runs, evals })
}

#[derive(Debug)]
pub struct ProfileOutputs {
    pub target: String,
    pub points: Vec<ProfilePoint>,
    pub mcap: Option<McapResult>,
}

/// Profiles each configured target and computes its adjusted confidence
/// interval; writes `profile_<target>.csv` and `mcap_<target>.csv` per
/// target and appends one ledger record per profile point.
pub fn cmd_profile(config: &RunConfig) -> Result<Vec<ProfileOutputs>> {
    if config.profile.targets.is_empty() {
        return Err(Error::Config("field `profile.targets`: none configured".into()));
    }
    let model = config.build_model()?;
    let base = config.param_vector(&model)?;
    let data = read_data(&config.data_path()?)?;
    let settings = config.profile_settings(&model)?;
    let mcap_settings = config.mcap_settings();
    let hypercube = config.hypercube(&model)?;
    let wf_seed = derive_seed(config.seed, &[WF_PROFILE]);

    // the maximizer: best ranked candidate when a search has run, else the
    // configured parameter point
    let mle = read_best_candidate(&out_path(config, "candidates.csv"), &model)?
        .unwrap_or_else(|| base.clone());

    let mut outputs = Vec::new();
    for (k, target) in config.profile.targets.iter().enumerate() {
        let target_seed = derive_seed(wf_seed, &[tag::GRID, k as u64]);
        let (points, mcap_result) = match config.profile.grid.get(target) {
            Some(grid) => {
                let grid = grid.values()?;
                let points = profile_likelihood(
                    &model, &data, target, &grid, &base, &hypercube, &settings, target_seed,
                )?;
                let mcap_result = if points.len() >= 5 {
                    Some(mcap(
                        &points,
                        &mcap_settings,
                        &mut stream(target_seed, &[tag::BOOT]),
                    )?)
                } else {
                    eprintln!(
                        "warning: profile for `{target}` has {} point(s); \
                         need at least 5 for a confidence interval",
                        points.len()
                    );
                    None
                };
                (points, mcap_result)
            }
            None => {
                let auto = pompkit_core::profile_auto(
                    &model,
                    &data,
                    target,
                    mle.get(target)?,
                    &base,
                    &hypercube,
                    &settings,
                    &mcap_settings,
                    target_seed,
                )?;
                (auto.points, Some(auto.mcap))
            }
        };

        write_profile_csv(&out_path(config, &format!("profile_{target}.csv")), &model, &points)?;
        write_mcap_csv(
            &out_path(config, &format!("mcap_{target}.csv")),
            mcap_result.as_ref(),
        )?;
        for p in &points {
            if let Some(nuisance) = &p.nuisance {
                ledger_append(
                    &LedgerRecord::now(
                        &model.name,
                        &format!("profile:{target}"),
                        config.seed,
                        settings.eval_particles,
                        settings.eval_replicates,
                        p.loglik,
                        p.se,
                        nuisance.clone(),
                    ),
                    &ledger_path(config),
                )?;
            }
        }
        outputs.push(ProfileOutputs {
            target: target.clone(),
            points,
            mcap: mcap_result,
        });
    }
    Ok(outputs)
}

fn write_profile_csv(
    path: &Path,
    model: &pompkit_core::PompModel,
    points: &[ProfilePoint],
) -> Result<()> {
    let mut header: Vec<String> = vec!["value".into(), "loglik".into(), "se".into(), "nfail".into()];
    for d in model.space().defs() {
        header.push(format!("param_{}", d.name));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut w = CsvWriter::create(path, &header_refs)?;
    for p in points {
        let mut row = vec![
            fmt_f64(p.value),
            fmt_f64(p.loglik),
            fmt_f64(p.se),
            p.n_failures.to_string(),
        ];
        match &p.nuisance {
            Some(v) => row.extend(v.values().iter().map(|x| fmt_f64(*x))),
            None => row.extend(std::iter::repeat_n(String::new(), model.space().len())),
        }
        w.row(&row)?;
    }
    w.finish()
}

/// The smoothed curve with the quadratic approximation and the interval as
/// constant columns, plot-ready.
fn write_mcap_csv(path: &Path, result: Option<&McapResult>) -> Result<()> {
    let header = [
        "value",
        "smoothed",
        "quadratic",
        "cutoff",
        "ci_lo",
        "ci_hi",
        "argmax",
        "max_smoothed",
        "se_stat",
        "se_mc",
        "level",
    ];
    let mut w = CsvWriter::create(path, &header)?;
    if let Some(r) = result {
        let ci_lo = r.ci.0.map(fmt_f64).unwrap_or_default();
        let ci_hi = r.ci.1.map(fmt_f64).unwrap_or_default();
        for &(x, s) in &r.curve {
            w.row(&[
                fmt_f64(x),
                fmt_f64(s),
                fmt_f64(r.quadratic.eval(x)),
                fmt_f64(r.cutoff),
                ci_lo.clone(),
                ci_hi.clone(),
                fmt_f64(r.argmax),
                fmt_f64(r.max_loglik),
                fmt_f64(r.se_stat),
                fmt_f64(r.se_mc),
                fmt_f64(r.level),
            ])?;
        }
    }
    w.finish()
}

/// Top-ranked parameter vector from a previous search's `candidates.csv`.
fn read_best_candidate(
    path: &Path,
    model: &pompkit_core::PompModel,
) -> Result<Option<ParamVector>> {
    if !path.exists() {
        return Ok(None);
    }
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .clone();
    let space = model.space();
    let mut indices = Vec::with_capacity(space.len());
    for d in space.defs() {
        let col = headers
            .iter()
            .position(|h| h == format!("param_{}", d.name))
            .ok_or_else(|| {
                Error::Data(format!("{}: missing column param_{}", path.display(), d.name))
            })?;
        indices.push(col);
    }
    match reader.records().next() {
        None => Ok(None),
        Some(record) => {
            let record = record.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            let mut values = Vec::with_capacity(space.len());
            for &col in &indices {
                let v: f64 = record
                    .get(col)
                    .ok_or_else(|| Error::Data(format!("{}: short row", path.display())))?
                    .parse()
                    .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
                values.push(v);
            }
            Ok(Some(ParamVector::new(Arc::clone(space), values)?))
        }
    }
}
