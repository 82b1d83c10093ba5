//! Closed-population Markovian SIR model with Poisson-distributed case
//! reports of the per-interval incidence.

use std::sync::Arc;

use crate::error::Result;
use crate::model::{InitFn, ObsDensityFn, ObsSampleFn, PompModel, SkeletonFn, StepFn};
use crate::models::obs::{poisson_obs_logdensity, sample_poisson};
use crate::models::rk4_step;
use crate::params::{ParamDef, ParamScale, ParamSpace, ParamVector};
use crate::sim::{gillespie_advance, tau_leap_step, Reaction, ReactionSet, SimMethod};
use crate::state::StateVector;

pub const S: usize = 0;
pub const I: usize = 1;
pub const R: usize = 2;

/// beta: infectious contacts per week; gamma: recovery rate per week;
/// pop: population size; i0: initial infectives; kappa: reporting
/// probability (1 = all cases reported).
pub fn sir_space() -> ParamSpace {
    ParamSpace::new(vec![
        ParamDef::new("beta", ParamScale::Log, true),
        ParamDef::new("gamma", ParamScale::Log, true),
        ParamDef::new("pop", ParamScale::Identity, false),
        ParamDef::new("i0", ParamScale::Identity, false),
        ParamDef::new("kappa", ParamScale::Logit, false),
    ])
    .expect("static definitions are valid")
}

/// Default parameter point: beta 1, gamma 0.5, population 10000, one
/// initial infective, full reporting.
pub fn sir_defaults(space: &Arc<ParamSpace>) -> ParamVector {
    ParamVector::new(Arc::clone(space), vec![1.0, 0.5, 10_000.0, 1.0, 1.0])
        .expect("defaults are in-domain")
}

/// Infection S->I at rate beta*I*S/N (counted as incidence) and recovery
/// I->R at rate gamma*I.
pub fn sir_reactions(space: &ParamSpace) -> Result<ReactionSet> {
    let beta = space.require("beta")?;
    let gamma = space.require("gamma")?;
    let pop = space.require("pop")?;
    Ok(ReactionSet::new(
        vec![
            Reaction::new("infection", Some(S), Some(I), move |x, p, _t| {
                p[beta] * x.counts[I] * x.counts[S] / p[pop]
            })
            .with_incidence()
            .scaled_by_noise(),
            Reaction::new("recovery", Some(I), Some(R), move |x, p, _t| {
                p[gamma] * x.counts[I]
            }),
        ],
        3,
    ))
}

/// Deterministic skeleton: dS = -beta*I*S/N, dI = beta*I*S/N - gamma*I,
/// dR = gamma*I, dH = beta*I*S/N.
pub fn sir_skeleton(space: &ParamSpace) -> Result<Arc<SkeletonFn>> {
    let beta = space.require("beta")?;
    let gamma = space.require("gamma")?;
    let pop = space.require("pop")?;
    Ok(Arc::new(move |y: &[f64], p: &[f64], _t: f64, out: &mut [f64]| {
        let force = p[beta] * y[I] * y[S] / p[pop];
        let recover = p[gamma] * y[I];
        out[S] = -force;
        out[I] = force - recover;
        out[R] = recover;
        out[3] = force;
    }))
}

pub fn sir_model(method: SimMethod, tau_sim: f64) -> Result<PompModel> {
    let space = Arc::new(sir_space());
    let reactions = Arc::new(sir_reactions(&space)?);
    let skeleton = sir_skeleton(&space)?;
    let i_pop = space.require("pop")?;
    let i_i0 = space.require("i0")?;
    let i_kappa = space.require("kappa")?;

    let init: Box<InitFn> = Box::new(move |p, t0, _rng| {
        Ok(StateVector::new(vec![p[i_pop] - p[i_i0], p[i_i0], 0.0], t0))
    });

    let step: Box<StepFn> = match method {
        SimMethod::TauLeap => {
            let rs = Arc::clone(&reactions);
            Box::new(move |state, p, t, tau, rng| tau_leap_step(state, &rs, p, t, tau, 1.0, rng))
        }
        SimMethod::Gillespie => {
            let rs = Arc::clone(&reactions);
            Box::new(move |state, p, _t, tau, rng| {
                let t_end = state.t + tau;
                gillespie_advance(state, &rs, p, t_end, 1.0, rng)
            })
        }
        SimMethod::Skeleton => {
            let sk = Arc::clone(&skeleton);
            Box::new(move |state, p, t, tau, _rng| {
                rk4_step(&*sk, state, p, t, tau);
                Ok(())
            })
        }
    };

    let obs_logdensity: Box<ObsDensityFn> = Box::new(move |y, state, p| {
        poisson_obs_logdensity(y, state.incidence, p[i_kappa])
    });
    let obs_sample: Box<ObsSampleFn> = Box::new(move |state, p, rng| {
        sample_poisson(p[i_kappa] * state.incidence, rng)
    });

    PompModel::new(
        "sir",
        vec!["S".into(), "I".into(), "R".into()],
        space,
        0.0,
        tau_sim,
        true,
        init,
        step,
        obs_logdensity,
        obs_sample,
        Some(skeleton),
    )
}
