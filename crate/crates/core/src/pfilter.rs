//! Bootstrap particle filter (sequential importance resampling) and the
//! naive unconditional Monte Carlo likelihood estimator it replaces.

use rayon::prelude::*;

use rand::Rng;

use crate::data::TimeSeries;
use crate::error::{Error, Result};
use crate::model::PompModel;
use crate::params::ParamVector;
use crate::rng::{self, tag, StreamRng};
use crate::state::StateVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResampleScheme {
    /// Independent index draws proportional to weight.
    Multinomial,
    /// Stratified positions from a single uniform offset (lower variance).
    Systematic,
}

#[derive(Debug, Clone)]
pub struct PfilterSettings {
    /// Number of particles J.
    pub particles: usize,
    /// Likelihood-scale tolerance: an observation where every particle
    /// weight falls below it is a filtering failure.
    pub tol: f64,
    pub scheme: ResampleScheme,
    /// Record weighted prediction-ensemble means of each state variable.
    pub track_filter_means: bool,
    /// Propagate particles on the rayon pool. Results are identical either
    /// way; per-particle streams make the output schedule-independent.
    pub parallel_particles: bool,
}

impl Default for PfilterSettings {
    fn default() -> Self {
        Self {
            particles: 1000,
            tol: 1e-17,
            scheme: ResampleScheme::Multinomial,
            track_filter_means: false,
            parallel_particles: false,
        }
    }
}

impl PfilterSettings {
    pub fn with_particles(particles: usize) -> Self {
        Self {
            particles,
            ..Self::default()
        }
    }
}

/// Output of one filter pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    /// Total log-likelihood estimate: exactly the sum of `cond_loglik`.
    pub loglik: f64,
    /// Conditional log-likelihood of each observation given its past.
    pub cond_loglik: Vec<f64>,
    /// Effective sample size per observation (0 at filtering failures).
    pub ess: Vec<f64>,
    /// 1-based observation numbers at which filtering failed.
    pub failures: Vec<usize>,
    /// Weighted prediction-ensemble mean of (compartments..., incidence)
    /// per observation, when tracking is enabled.
    pub filter_means: Option<Vec<Vec<f64>>>,
}

impl FilterResult {
    pub fn n_failures(&self) -> usize {
        self.failures.len()
    }
}

/// `(sum w)^2 / sum w^2`, in `[1, J]` for non-degenerate weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    s * s / s2
}

/// Draws `n` ancestor indices proportional to `weights`.
pub fn resample(
    weights: &[f64],
    n: usize,
    scheme: ResampleScheme,
    rng: &mut StreamRng,
) -> Result<Vec<usize>> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Model(format!(
            "cannot resample: total weight {total}"
        )));
    }
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cumulative.push(acc);
    }
    let mut out = Vec::with_capacity(n);
    match scheme {
        ResampleScheme::Multinomial => {
            for _ in 0..n {
                let u = rng.random::<f64>() * total;
                out.push(lower_bound(&cumulative, u));
            }
        }
        ResampleScheme::Systematic => {
            let step = total / n as f64;
            let mut u = rng.random::<f64>() * step;
            let mut idx = 0usize;
            for _ in 0..n {
                while cumulative[idx] <= u && idx + 1 < cumulative.len() {
                    idx += 1;
                }
                out.push(idx);
                u += step;
            }
        }
    }
    Ok(out)
}

fn lower_bound(cumulative: &[f64], u: f64) -> usize {
    match cumulative.binary_search_by(|c| c.partial_cmp(&u).unwrap()) {
        Ok(i) => (i + 1).min(cumulative.len() - 1),
        Err(i) => i.min(cumulative.len() - 1),
    }
}

/// Parameter handling of one filter pass: either one shared natural-scale
/// vector, or a per-particle swarm on the estimation scale with random-walk
/// perturbations of sd `sigma` before propagation.
pub(crate) enum PassMode<'a> {
    Fixed(&'a [f64]),
    Swarm {
        est: &'a mut Vec<Vec<f64>>,
        sigma: &'a [f64],
    },
}

/// One particle-filter pass through the data. All draws come from streams
/// derived from `seed`: `(INIT, j)` for initialization, `(PERTURB, n, j)`
/// for parameter perturbations, `(PROP, n, j)` for propagation and
/// `(RESAMPLE, n)` for the ancestor draw, with n = 0 for the pre-data
/// perturbation.
pub(crate) fn filter_pass(
    model: &PompModel,
    data: &TimeSeries,
    settings: &PfilterSettings,
    seed: u64,
    mode: &mut PassMode,
) -> Result<FilterResult> {
    let j_particles = settings.particles;
    if j_particles == 0 {
        return Err(Error::Config("particle count must be >= 1".into()));
    }
    if !(settings.tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be > 0, got {}", settings.tol)));
    }
    let log_tol = settings.tol.ln();
    let space = model.space();

    // Per-particle natural-scale parameter buffer (swarm mode only).
    let mut naturals: Vec<Vec<f64>> = Vec::new();
    if let PassMode::Swarm { est, sigma } = mode {
        if est.len() != j_particles {
            return Err(Error::Config(format!(
                "swarm size {} does not match particle count {j_particles}",
                est.len()
            )));
        }
        perturb_swarm(est, sigma, seed, 0);
        naturals = est
            .iter()
            .map(|z| {
                let mut v = z.clone();
                crate::params::natural_from_estimation(space, &mut v);
                v
            })
            .collect();
    }

    let mut states: Vec<StateVector> = (0..j_particles)
        .map(|j| {
            let mut r = rng::stream(seed, &[tag::INIT, j as u64]);
            let p = match mode {
                PassMode::Fixed(p) => *p,
                PassMode::Swarm { .. } => naturals[j].as_slice(),
            };
            model.init_state(p, &mut r)
        })
        .collect::<Result<_>>()?;

    let n_obs = data.len();
    let mut cond = Vec::with_capacity(n_obs);
    let mut ess = Vec::with_capacity(n_obs);
    let mut failures = Vec::new();
    let mut means = settings.track_filter_means.then(Vec::new);
    let mut logw = vec![0.0f64; j_particles];

    for i in 0..n_obs {
        let n = i + 1; // 1-based observation number
        let t_n = data.time(i);
        let y_n = data.value(i);

        if let PassMode::Swarm { est, sigma } = mode {
            perturb_swarm(est, sigma, seed, n as u64);
            for (nat, z) in naturals.iter_mut().zip(est.iter()) {
                nat.copy_from_slice(z);
                crate::params::natural_from_estimation(space, nat);
            }
        }

        let propagate = |(j, state): (usize, &mut StateVector)| -> Result<f64> {
            let mut r = rng::stream(seed, &[tag::PROP, n as u64, j as u64]);
            let p = match &*mode {
                PassMode::Fixed(p) => *p,
                PassMode::Swarm { .. } => naturals[j].as_slice(),
            };
            model.step_to(state, p, t_n, &mut r)?;
            Ok(model.obs_logdensity(y_n, state, p))
        };
        if settings.parallel_particles {
            let w: Result<Vec<f64>> = states.par_iter_mut().enumerate().map(propagate).collect();
            logw.copy_from_slice(&w?);
        } else {
            for (j, state) in states.iter_mut().enumerate() {
                logw[j] = propagate((j, state))?;
            }
        }

        let mut max_logw = f64::NEG_INFINITY;
        for (j, &lw) in logw.iter().enumerate() {
            if lw.is_nan() || lw == f64::INFINITY {
                let _ = j;
                return Err(Error::NonFiniteWeight { observation: n });
            }
            max_logw = max_logw.max(lw);
        }

        if max_logw < log_tol {
            // filtering failure: the step carries no information; keep the
            // prediction ensemble and move on
            failures.push(n);
            cond.push(log_tol);
            ess.push(0.0);
            if let Some(m) = means.as_mut() {
                m.push(unweighted_mean(&states));
            }
        } else {
            let mut weights = vec![0.0f64; j_particles];
            let mut sum = 0.0;
            for (w, &lw) in weights.iter_mut().zip(&logw) {
                *w = (lw - max_logw).exp();
                sum += *w;
            }
            cond.push(max_logw + (sum / j_particles as f64).ln());
            ess.push(effective_sample_size(&weights));
            if let Some(m) = means.as_mut() {
                m.push(weighted_mean(&states, &weights, sum));
            }

            let mut res_rng = rng::stream(seed, &[tag::RESAMPLE, n as u64]);
            let ancestors = resample(&weights, j_particles, settings.scheme, &mut res_rng)?;
            states = ancestors.iter().map(|&a| states[a].clone()).collect();
            if let PassMode::Swarm { est, .. } = mode {
                let gathered: Vec<Vec<f64>> = ancestors.iter().map(|&a| est[a].clone()).collect();
                **est = gathered;
            }
        }

        for state in &mut states {
            state.reset_incidence();
        }
    }

    Ok(FilterResult {
        loglik: cond.iter().sum(),
        cond_loglik: cond,
        ess,
        failures,
        filter_means: means,
    })
}

fn perturb_swarm(est: &mut [Vec<f64>], sigma: &[f64], seed: u64, n: u64) {
    if sigma.iter().all(|s| *s == 0.0) {
        return;
    }
    for (j, member) in est.iter_mut().enumerate() {
        let mut r = rng::stream(seed, &[tag::PERTURB, n, j as u64]);
        crate::mif2::perturb(member, sigma, &mut r);
    }
}

fn weighted_mean(states: &[StateVector], weights: &[f64], sum: f64) -> Vec<f64> {
    let dim = states[0].counts.len() + 1;
    let mut out = vec![0.0; dim];
    for (state, &w) in states.iter().zip(weights) {
        for (o, c) in out.iter_mut().zip(&state.counts) {
            *o += w * c;
        }
        out[dim - 1] += w * state.incidence;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

fn unweighted_mean(states: &[StateVector]) -> Vec<f64> {
    let dim = states[0].counts.len() + 1;
    let mut out = vec![0.0; dim];
    for state in states {
        for (o, c) in out.iter_mut().zip(&state.counts) {
            *o += c;
        }
        out[dim - 1] += state.incidence;
    }
    for o in &mut out {
        *o /= states.len() as f64;
    }
    out
}

/// Runs the bootstrap filter at a fixed parameter vector and returns the
/// unbiased likelihood estimate with its per-observation diagnostics.
pub fn particle_filter(
    model: &PompModel,
    data: &TimeSeries,
    params: &ParamVector,
    settings: &PfilterSettings,
    seed: u64,
) -> Result<FilterResult> {
    check_params(model, params)?;
    filter_pass(
        model,
        data,
        settings,
        seed,
        &mut PassMode::Fixed(params.values()),
    )
}

/// Naive Monte Carlo likelihood: average of per-trajectory likelihoods over
/// unconditional simulations.
#[derive(Debug, Clone)]
pub struct NaiveResult {
    /// Log of the averaged likelihood.
    pub loglik: f64,
    /// Delta-method standard error of `loglik`.
    pub se: f64,
    /// Trajectories whose likelihood underflowed to zero.
    pub n_zero: usize,
}

/// Simulates `n_traj` unconditional trajectories, evaluates the observation
/// density product along each, and averages on the likelihood scale.
pub fn naive_mc_loglik(
    model: &PompModel,
    data: &TimeSeries,
    params: &ParamVector,
    n_traj: usize,
    seed: u64,
) -> Result<NaiveResult> {
    if n_traj < 2 {
        return Err(Error::Config("naive Monte Carlo needs >= 2 trajectories".into()));
    }
    check_params(model, params)?;
    let p = params.values();
    let logliks: Result<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|j| {
            let mut r = rng::stream(seed, &[tag::TRAJ, j as u64]);
            let mut state = model.init_state(p, &mut r)?;
            let mut ll = 0.0;
            for i in 0..data.len() {
                model.step_to(&mut state, p, data.time(i), &mut r)?;
                ll += model.obs_logdensity(data.value(i), &state, p);
                state.reset_incidence();
            }
            Ok(ll)
        })
        .collect();
    let logliks = logliks?;

    let max = logliks.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let n_zero = logliks.iter().filter(|l| **l == f64::NEG_INFINITY).count();
    if max == f64::NEG_INFINITY {
        return Ok(NaiveResult {
            loglik: f64::NEG_INFINITY,
            se: f64::INFINITY,
            n_zero,
        });
    }
    let scaled: Vec<f64> = logliks.iter().map(|l| (l - max).exp()).collect();
    let mean = scaled.iter().sum::<f64>() / n_traj as f64;
    let var = scaled.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n_traj - 1) as f64;
    Ok(NaiveResult {
        loglik: max + mean.ln(),
        se: var.sqrt() / (mean * (n_traj as f64).sqrt()),
        n_zero,
    })
}

fn check_params(model: &PompModel, params: &ParamVector) -> Result<()> {
    if params.space().len() != model.space().len() {
        return Err(Error::Config(
            "parameter vector does not match the model's parameter space".into(),
        ));
    }
    Ok(())
}
