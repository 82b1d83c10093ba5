//! Iterated filtering: a particle filter over an augmented (state,
//! parameter) space in which every particle's parameter vector follows a
//! random walk whose intensity cools geometrically across iterations. The
//! swarm mean converges toward the maximum-likelihood estimate.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::data::TimeSeries;
use crate::error::{Error, Result};
use crate::model::PompModel;
use crate::params::{ParamSpace, ParamVector};
use crate::pfilter::{filter_pass, particle_filter, PassMode, PfilterSettings, ResampleScheme};
use crate::rng::{self, tag, StreamRng};

/// Settings of one iterated-filtering search.
#[derive(Debug, Clone)]
pub struct Mif2Settings {
    /// Number of filtering iterations M.
    pub iterations: usize,
    /// Number of particles J.
    pub particles: usize,
    /// Base random-walk sd on the estimation scale, applied to every
    /// estimated parameter unless overridden by name.
    pub rw_sd: f64,
    pub rw_sd_overrides: Vec<(String, f64)>,
    /// Cooling fraction k: the perturbation intensity on iteration m is
    /// k^(m / horizon).
    pub cooling_fraction: f64,
    /// Iterations over which the intensity reaches k.
    pub cooling_horizon: f64,
    /// Filtering-failure tolerance, as in the plain filter.
    pub tol: f64,
    pub scheme: ResampleScheme,
    pub parallel_particles: bool,
}

impl Default for Mif2Settings {
    fn default() -> Self {
        Self {
            iterations: 100,
            particles: 500,
            rw_sd: 0.02,
            rw_sd_overrides: Vec::new(),
            cooling_fraction: 0.05,
            cooling_horizon: 50.0,
            tol: 1e-17,
            scheme: ResampleScheme::Multinomial,
            parallel_particles: false,
        }
    }
}

impl Mif2Settings {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.particles == 0 {
            return Err(Error::Config("iterations and particles must be >= 1".into()));
        }
        if !(self.rw_sd >= 0.0) {
            return Err(Error::Config(format!("rw_sd must be >= 0, got {}", self.rw_sd)));
        }
        if !(self.cooling_fraction > 0.0 && self.cooling_fraction < 1.0) {
            return Err(Error::Config(format!(
                "cooling fraction must be in (0,1), got {}",
                self.cooling_fraction
            )));
        }
        if !(self.cooling_horizon > 0.0) {
            return Err(Error::Config("cooling horizon must be > 0".into()));
        }
        Ok(())
    }

    /// Dense per-coordinate base sd: `rw_sd` (or its override) on estimated
    /// coordinates, exactly zero on fixed ones.
    pub fn resolve_rw_sd(&self, space: &ParamSpace) -> Result<Vec<f64>> {
        let mut sigma = vec![0.0; space.len()];
        for (i, d) in space.defs().iter().enumerate() {
            if d.estimated {
                sigma[i] = self.rw_sd;
            }
        }
        for (name, sd) in &self.rw_sd_overrides {
            let i = space.require(name)?;
            if !(*sd >= 0.0) {
                return Err(Error::Config(format!("rw_sd for `{name}` must be >= 0")));
            }
            if !space.def(i).estimated && *sd > 0.0 {
                return Err(Error::Config(format!(
                    "cannot perturb fixed parameter `{name}`"
                )));
            }
            if space.def(i).estimated {
                sigma[i] = *sd;
            }
        }
        Ok(sigma)
    }

    fn pfilter_settings(&self) -> PfilterSettings {
        PfilterSettings {
            particles: self.particles,
            tol: self.tol,
            scheme: self.scheme,
            track_filter_means: false,
            parallel_particles: self.parallel_particles,
        }
    }
}

/// Relative perturbation intensity on iteration `m`: `k^(m / horizon)`,
/// which is 1 in the limit m -> 0 and reaches k at the horizon.
pub fn cooling_intensity(m: usize, cooling_fraction: f64, horizon: f64) -> f64 {
    cooling_fraction.powf(m as f64 / horizon)
}

/// Adds independent normal increments on the estimation scale; coordinates
/// with zero sd (fixed parameters, cooled-out coordinates) are untouched and
/// consume no randomness.
pub fn perturb(values: &mut [f64], sigma: &[f64], rng: &mut StreamRng) {
    let normal = Normal::new(0.0, 1.0).unwrap();
    for (v, &s) in values.iter_mut().zip(sigma) {
        if s > 0.0 {
            *v += s * normal.sample(rng);
        }
    }
}

/// J parameter vectors on the estimation scale.
#[derive(Debug, Clone)]
pub struct ParamSwarm {
    space: Arc<ParamSpace>,
    members: Vec<Vec<f64>>,
    /// Completed filtering iterations.
    pub iteration: usize,
}

impl ParamSwarm {
    /// Swarm of `n` replicas of one starting point.
    pub fn replicate(start: &ParamVector, n: usize) -> Result<Self> {
        let est = start.to_estimation_scale()?;
        Ok(Self {
            space: Arc::clone(start.space()),
            members: vec![est.values().to_vec(); n],
            iteration: 0,
        })
    }

    pub fn space(&self) -> &Arc<ParamSpace> {
        &self.space
    }

    pub fn members(&self) -> &[Vec<f64>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Natural-scale member values for one coordinate.
    pub fn natural_coordinate(&self, index: usize) -> Vec<f64> {
        let def = self.space.def(index);
        self.members
            .iter()
            .map(|m| {
                if def.estimated {
                    def.scale.to_natural(m[index])
                } else {
                    m[index]
                }
            })
            .collect()
    }

    /// Arithmetic mean of the swarm on the natural scale.
    pub fn mean_natural(&self) -> Result<ParamVector> {
        let d = self.space.len();
        let mut mean = vec![0.0; d];
        for i in 0..d {
            let coord = self.natural_coordinate(i);
            mean[i] = coord.iter().sum::<f64>() / coord.len() as f64;
        }
        ParamVector::new(Arc::clone(&self.space), mean)
    }

    /// Natural-scale standard deviation of one coordinate across the swarm.
    pub fn natural_sd(&self, index: usize) -> f64 {
        let coord = self.natural_coordinate(index);
        let n = coord.len() as f64;
        let mean = coord.iter().sum::<f64>() / n;
        (coord.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
    }
}

/// Result of one iterated-filtering search.
#[derive(Debug, Clone)]
pub struct Mif2Result {
    pub swarm: ParamSwarm,
    /// Mean of the final swarm on the natural scale.
    pub estimate: ParamVector,
    /// Per-iteration log-likelihood of the perturbed filter (diagnostic
    /// only: evaluate candidates with unperturbed filters).
    pub loglik_trace: Vec<f64>,
    pub nfail_trace: Vec<usize>,
    /// Per-iteration natural-scale swarm means of the estimated parameters,
    /// ordered as `estimated_names`.
    pub param_traces: Vec<Vec<f64>>,
    pub estimated_names: Vec<String>,
}

/// Runs the iterated-filtering search from an initial swarm. Iteration m
/// perturbs with sd `rw_sd * k^(m/horizon)`, filters the data with
/// per-particle parameters, and carries the resampled swarm forward; the
/// point estimate is the mean of the final swarm.
pub fn mif2(
    model: &PompModel,
    data: &TimeSeries,
    swarm0: &ParamSwarm,
    settings: &Mif2Settings,
    seed: u64,
) -> Result<Mif2Result> {
    settings.validate()?;
    if swarm0.len() != settings.particles {
        return Err(Error::Config(format!(
            "initial swarm size {} does not match particle count {}",
            swarm0.len(),
            settings.particles
        )));
    }
    let space = model.space();
    let sigma0 = settings.resolve_rw_sd(space)?;
    let estimated = space.estimated_indices();
    let estimated_names: Vec<String> = estimated
        .iter()
        .map(|&i| space.def(i).name.clone())
        .collect();
    let pf_settings = settings.pfilter_settings();

    let mut members = swarm0.members().to_vec();
    let mut loglik_trace = Vec::with_capacity(settings.iterations);
    let mut nfail_trace = Vec::with_capacity(settings.iterations);
    let mut param_traces = Vec::with_capacity(settings.iterations);

    for m in 1..=settings.iterations {
        let seed_m = rng::derive_seed(seed, &[tag::MIF_ITER, m as u64]);
        let factor = cooling_intensity(m, settings.cooling_fraction, settings.cooling_horizon);
        let sigma_m: Vec<f64> = sigma0.iter().map(|s| s * factor).collect();
        let result = filter_pass(
            model,
            data,
            &pf_settings,
            seed_m,
            &mut PassMode::Swarm {
                est: &mut members,
                sigma: &sigma_m,
            },
        )?;
        loglik_trace.push(result.loglik);
        nfail_trace.push(result.n_failures());

        let swarm_now = ParamSwarm {
            space: Arc::clone(space),
            members: members.clone(),
            iteration: m,
        };
        param_traces.push(
            estimated
                .iter()
                .map(|&i| {
                    let coord = swarm_now.natural_coordinate(i);
                    coord.iter().sum::<f64>() / coord.len() as f64
                })
                .collect(),
        );
    }

    let swarm = ParamSwarm {
        space: Arc::clone(space),
        members,
        iteration: settings.iterations,
    };
    let estimate = swarm.mean_natural()?;
    Ok(Mif2Result {
        swarm,
        estimate,
        loglik_trace,
        nfail_trace,
        param_traces,
        estimated_names,
    })
}

/// Natural-scale box over the estimated parameters, used to draw starting
/// values for multi-start searches.
#[derive(Debug, Clone)]
pub struct Hypercube {
    bounds: Vec<(String, f64, f64)>,
}

impl Hypercube {
    pub fn new(bounds: Vec<(String, f64, f64)>) -> Self {
        Self { bounds }
    }

    pub fn bounds(&self) -> &[(String, f64, f64)] {
        &self.bounds
    }

    pub fn bounds_for(&self, name: &str) -> Option<(f64, f64)> {
        self.bounds
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|&(_, lo, hi)| (lo, hi))
    }

    /// Checks the box names estimated parameters only, covers all of them,
    /// and stays inside open scale domains.
    pub fn validate(&self, space: &ParamSpace) -> Result<()> {
        for (name, lo, hi) in &self.bounds {
            let i = space.require(name)?;
            let def = space.def(i);
            if !def.estimated {
                return Err(Error::Config(format!(
                    "hypercube bounds given for fixed parameter `{name}`"
                )));
            }
            if !(lo < hi) {
                return Err(Error::Config(format!(
                    "hypercube for `{name}`: need lo < hi, got [{lo}, {hi}]"
                )));
            }
            if !def.scale.contains_open(*lo) || !def.scale.contains_open(*hi) {
                return Err(Error::Config(format!(
                    "hypercube for `{name}` leaves the parameter's domain"
                )));
            }
        }
        for i in space.estimated_indices() {
            let name = &space.def(i).name;
            if self.bounds_for(name).is_none() {
                return Err(Error::Config(format!(
                    "estimated parameter `{name}` has no hypercube bounds"
                )));
            }
        }
        Ok(())
    }

    /// Uniform draw on the natural scale; fixed coordinates come from
    /// `base`.
    pub fn sample(&self, base: &ParamVector, rng: &mut StreamRng) -> Result<ParamVector> {
        let space = base.space();
        let mut values = base.values().to_vec();
        for (name, lo, hi) in &self.bounds {
            let i = space.require(name)?;
            values[i] = rng.random_range(*lo..*hi);
        }
        ParamVector::new(Arc::clone(space), values)
    }
}

/// One multi-start search run.
#[derive(Debug, Clone)]
pub struct Mif2Run {
    pub start_index: usize,
    pub start: ParamVector,
    pub result: Mif2Result,
}

/// Runs `starts` independent searches with starting values drawn uniformly
/// from the hypercube, in parallel; run i uses streams derived from
/// `(seed, START, i)` and `(seed, SEARCH, i)`, so the output does not depend
/// on scheduling.
pub fn mif2_multi_start(
    model: &PompModel,
    data: &TimeSeries,
    base: &ParamVector,
    hypercube: &Hypercube,
    settings: &Mif2Settings,
    starts: usize,
    seed: u64,
) -> Result<Vec<Mif2Run>> {
    hypercube.validate(model.space())?;
    (0..starts)
        .into_par_iter()
        .map(|i| {
            let mut start_rng = rng::stream(seed, &[tag::START, i as u64]);
            let start = hypercube.sample(base, &mut start_rng)?;
            let swarm0 = ParamSwarm::replicate(&start, settings.particles)?;
            let result = mif2(
                model,
                data,
                &swarm0,
                settings,
                rng::derive_seed(seed, &[tag::SEARCH, i as u64]),
            )?;
            Ok(Mif2Run {
                start_index: i,
                start,
                result,
            })
        })
        .collect()
}

/// Replicated-filter evaluation of one candidate.
#[derive(Debug, Clone)]
pub struct CandidateEval {
    pub candidate_index: usize,
    pub params: ParamVector,
    pub replicate_logliks: Vec<f64>,
    pub mean_loglik: f64,
    /// Monte Carlo standard error of the mean.
    pub se: f64,
    pub total_failures: usize,
}

/// Evaluates each candidate with `replicates` independent particle filters
/// of `particles` particles and ranks the candidates by mean log-likelihood
/// (ties: smaller standard error, then input order).
pub fn evaluate_candidates(
    candidates: &[ParamVector],
    model: &PompModel,
    data: &TimeSeries,
    replicates: usize,
    particles: usize,
    tol: f64,
    seed: u64,
) -> Result<Vec<CandidateEval>> {
    if replicates < 2 {
        return Err(Error::Config("candidate evaluation needs >= 2 replicates".into()));
    }
    let settings = PfilterSettings {
        particles,
        tol,
        ..PfilterSettings::default()
    };
    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..replicates).map(move |r| (c, r)))
        .collect();
    let results: Result<Vec<(usize, f64, usize)>> = jobs
        .into_par_iter()
        .map(|(c, r)| {
            let run = particle_filter(
                model,
                data,
                &candidates[c],
                &settings,
                rng::derive_seed(seed, &[tag::EVAL, c as u64, r as u64]),
            )?;
            Ok((c, run.loglik, run.n_failures()))
        })
        .collect();
    let results = results?;

    let mut evals: Vec<CandidateEval> = candidates
        .iter()
        .enumerate()
        .map(|(c, params)| {
            let logliks: Vec<f64> = results
                .iter()
                .filter(|(cc, _, _)| *cc == c)
                .map(|(_, l, _)| *l)
                .collect();
            let nfail: usize = results
                .iter()
                .filter(|(cc, _, _)| *cc == c)
                .map(|(_, _, f)| *f)
                .sum();
            let n = logliks.len() as f64;
            let mean = logliks.iter().sum::<f64>() / n;
            let var = logliks.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (n - 1.0);
            CandidateEval {
                candidate_index: c,
                params: params.clone(),
                replicate_logliks: logliks,
                mean_loglik: mean,
                se: (var / n).sqrt(),
                total_failures: nfail,
            }
        })
        .collect();
    evals.sort_by(|a, b| {
        b.mean_loglik
            .total_cmp(&a.mean_loglik)
            .then(a.se.total_cmp(&b.se))
            .then(a.candidate_index.cmp(&b.candidate_index))
    });
    Ok(evals)
}
