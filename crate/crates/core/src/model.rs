//! The partially observed Markov process model bundle.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::params::{ParamSpace, ParamVector};
use crate::rng::{self, tag, StreamRng};
use crate::state::StateVector;

pub type InitFn = dyn Fn(&[f64], f64, &mut StreamRng) -> Result<StateVector> + Send + Sync;
pub type StepFn = dyn Fn(&mut StateVector, &[f64], f64, f64, &mut StreamRng) -> Result<()> + Send + Sync;
pub type ObsDensityFn = dyn Fn(Option<u64>, &StateVector, &[f64]) -> f64 + Send + Sync;
pub type ObsSampleFn = dyn Fn(&StateVector, &[f64], &mut StreamRng) -> u64 + Send + Sync;
/// Right-hand side of the deterministic skeleton: writes d/dt of
/// (compartments..., incidence) into `out`, given real-valued compartments.
pub type SkeletonFn = dyn Fn(&[f64], &[f64], f64, &mut [f64]) + Send + Sync;

/// A POMP: initializer, process stepper, observation density and sampler,
/// optional deterministic skeleton, plus the simulation step size and origin.
///
/// The stepper advances the state by exactly `tau` given the (natural-scale)
/// parameter values; all compartment and parameter names are resolved to
/// dense indices when the model is built.
pub struct PompModel {
    pub name: String,
    pub compartments: Vec<String>,
    space: Arc<ParamSpace>,
    pub t0: f64,
    pub tau_sim: f64,
    /// Whether total occupancy is an invariant of the process (closed or
    /// replacement-balanced population).
    pub conserves_population: bool,
    init: Box<InitFn>,
    step: Box<StepFn>,
    obs_logdensity: Box<ObsDensityFn>,
    obs_sample: Box<ObsSampleFn>,
    skeleton: Option<std::sync::Arc<SkeletonFn>>,
}

impl std::fmt::Debug for PompModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PompModel")
            .field("name", &self.name)
            .field("compartments", &self.compartments)
            .field("t0", &self.t0)
            .field("tau_sim", &self.tau_sim)
            .field("conserves_population", &self.conserves_population)
            .finish_non_exhaustive()
    }
}

impl PompModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        compartments: Vec<String>,
        space: Arc<ParamSpace>,
        t0: f64,
        tau_sim: f64,
        conserves_population: bool,
        init: Box<InitFn>,
        step: Box<StepFn>,
        obs_logdensity: Box<ObsDensityFn>,
        obs_sample: Box<ObsSampleFn>,
        skeleton: Option<std::sync::Arc<SkeletonFn>>,
    ) -> Result<Self> {
        if !(tau_sim > 0.0) {
            return Err(Error::Config(format!("tau_sim must be > 0, got {tau_sim}")));
        }
        Ok(Self {
            name: name.to_string(),
            compartments,
            space,
            t0,
            tau_sim,
            conserves_population,
            init,
            step,
            obs_logdensity,
            obs_sample,
            skeleton,
        })
    }

    pub fn space(&self) -> &Arc<ParamSpace> {
        &self.space
    }

    /// Replaces the parameter space (e.g. after config overrides of
    /// estimated flags). The definitions must match by name and order since
    /// rate closures hold resolved indices.
    pub fn set_space(&mut self, space: Arc<ParamSpace>) -> Result<()> {
        if space.len() != self.space.len()
            || space
                .defs()
                .iter()
                .zip(self.space.defs())
                .any(|(a, b)| a.name != b.name)
        {
            return Err(Error::Config(
                "parameter space does not match the model's".into(),
            ));
        }
        self.space = space;
        Ok(())
    }

    pub fn n_compartments(&self) -> usize {
        self.compartments.len()
    }

    pub fn init_state(&self, params: &[f64], rng: &mut StreamRng) -> Result<StateVector> {
        (self.init)(params, self.t0, rng)
    }

    pub fn obs_logdensity(&self, y: Option<u64>, state: &StateVector, params: &[f64]) -> f64 {
        (self.obs_logdensity)(y, state, params)
    }

    pub fn sample_obs(&self, state: &StateVector, params: &[f64], rng: &mut StreamRng) -> u64 {
        (self.obs_sample)(state, params, rng)
    }

    pub fn skeleton(&self) -> Option<&SkeletonFn> {
        self.skeleton.as_deref()
    }

    /// Advances `state` to `t_target` in equal substeps of at most
    /// `tau_sim`, so no step straddles an observation time and the incidence
    /// accumulator can be read exactly at the target.
    pub fn step_to(
        &self,
        state: &mut StateVector,
        params: &[f64],
        t_target: f64,
        rng: &mut StreamRng,
    ) -> Result<()> {
        let t_from = state.t;
        let span = t_target - t_from;
        if span <= 0.0 {
            return Err(Error::Model(format!(
                "cannot step backwards: t = {t_from}, target {t_target}"
            )));
        }
        let n_sub = (span / self.tau_sim - 1e-9).ceil().max(1.0) as usize;
        let tau = span / n_sub as f64;
        for i in 0..n_sub {
            let t = t_from + span * i as f64 / n_sub as f64;
            (self.step)(state, params, t, tau, rng)?;
            state.t = t_from + span * (i + 1) as f64 / n_sub as f64;
        }
        state.t = t_target;
        Ok(())
    }
}

/// Outcome of [`validate_model`]: empty means pass.
#[derive(Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Simulates from the model and checks the basic contracts: finite
/// non-negative counts, population conservation (when declared), and
/// agreement between the observation sampler and observation density
/// (moment test at 3 sigma over `n_draws >= 1000` samples).
pub fn validate_model(
    model: &PompModel,
    params: &ParamVector,
    n_draws: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let n_draws = n_draws.max(1000);
    let mut report = ValidationReport::default();
    let p = params.values();
    let mut rng = rng::stream(seed, &[tag::VALIDATE, 0]);
    let mut state = model.init_state(p, &mut rng)?;
    if !state.is_valid() {
        report
            .violations
            .push("initializer produced negative or non-finite counts".into());
        return Ok(report);
    }
    let total0 = state.total();

    // March across 20 reporting intervals substep by substep so conservation
    // is checked after every step, not just at observation times.
    let mut check_state = None;
    for n in 1..=20u64 {
        let mut prop = rng::stream(seed, &[tag::VALIDATE, tag::PROP, n]);
        let target = model.t0 + n as f64;
        while state.t < target - 1e-12 {
            let next = (state.t + model.tau_sim).min(target);
            model.step_to(&mut state, p, next, &mut prop)?;
            if !state.is_valid() {
                report.violations.push(format!(
                    "negative or non-finite count at t = {:.4}",
                    state.t
                ));
                return Ok(report);
            }
            if model.conserves_population && (state.total() - total0).abs() > 1e-6 {
                report.violations.push(format!(
                    "population not conserved at t = {:.4}: {} vs {}",
                    state.t,
                    state.total(),
                    total0
                ));
                return Ok(report);
            }
        }
        if state.incidence > 0.0 && check_state.is_none() {
            check_state = Some(state.clone());
        }
        state.reset_incidence();
    }

    // Sampler vs density moment test on a state with non-trivial incidence.
    let check_state = check_state.unwrap_or(state);
    if let Some((dens_mean, dens_var)) = density_moments(model, &check_state, p) {
        let mut obs_rng = rng::stream(seed, &[tag::VALIDATE, tag::OBS]);
        let mut sum = 0.0;
        for _ in 0..n_draws {
            sum += model.sample_obs(&check_state, p, &mut obs_rng) as f64;
        }
        let sample_mean = sum / n_draws as f64;
        let se = (dens_var / n_draws as f64).sqrt();
        if (sample_mean - dens_mean).abs() > 3.0 * se.max(1e-12) {
            report.violations.push(format!(
                "observation sampler mean {sample_mean:.4} disagrees with density mean \
                 {dens_mean:.4} beyond 3 sigma ({:.3} sigma)",
                (sample_mean - dens_mean).abs() / se.max(1e-12)
            ));
        }
    }

    Ok(report)
}

/// Mean and variance implied by the observation log-density, by summation to
/// negligible tail mass. Returns `None` for a degenerate (point-mass-at-0)
/// density, where the moment test is vacuous.
fn density_moments(model: &PompModel, state: &StateVector, p: &[f64]) -> Option<(f64, f64)> {
    let mut mass = 0.0;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut y = 0u64;
    loop {
        let f = model.obs_logdensity(Some(y), state, p).exp();
        mass += f;
        mean += y as f64 * f;
        m2 += (y as f64) * (y as f64) * f;
        y += 1;
        if (mass > 1.0 - 1e-12 && y as f64 > 2.0 * mean / mass.max(1e-12)) || y > 2_000_000 {
            break;
        }
    }
    if mass < 0.5 {
        return None; // density does not normalize over counts; skip
    }
    let mean = mean / mass;
    let var = m2 / mass - mean * mean;
    if var <= 0.0 {
        None
    } else {
        Some((mean, var))
    }
}
