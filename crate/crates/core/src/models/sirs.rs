//! SIRS model with demographic turnover, waning immunity, cosine seasonal
//! forcing of transmission, gamma white noise on the transmission rate and
//! negative-binomial case reports.
//!
//! Demography keeps the population exactly constant: a death is modelled as
//! instantaneous replacement by a susceptible newborn, so deaths from I and R
//! are transitions back into S (a death in S is a no-op and is dropped).
//! Aggregate birth and per-compartment death rates match the usual
//! birth-rate-mu*N / death-rate-mu*A formulation.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{InitFn, ObsDensityFn, ObsSampleFn, PompModel, SkeletonFn, StepFn};
use crate::models::obs::{negbin_obs_logdensity, sample_negbin};
use crate::models::rk4_step;
use crate::params::{ParamDef, ParamScale, ParamSpace, ParamVector};
use crate::sim::{gamma_noise_increment, gillespie_advance, tau_leap_step, Reaction, ReactionSet, SimMethod};
use crate::state::StateVector;

pub const S: usize = 0;
pub const I: usize = 1;
pub const R: usize = 2;

/// Estimated: beta (mean transmission rate), rho (forcing amplitude), phi
/// (forcing phase), sigma_sq (infinitesimal transmission-noise variance),
/// psi (observation overdispersion). Fixed: gamma (recovery), omega
/// (waning), mu (turnover), w (forcing period, weeks), pop, kappa.
pub fn sirs_space() -> ParamSpace {
    ParamSpace::new(vec![
        ParamDef::new("beta", ParamScale::Log, true),
        ParamDef::new("rho", ParamScale::Logit, true),
        ParamDef::new(
            "phi",
            ParamScale::LogitRange {
                lo: 0.0,
                hi: std::f64::consts::TAU,
            },
            true,
        ),
        ParamDef::new("sigma_sq", ParamScale::Log, true),
        ParamDef::new("psi", ParamScale::Log, true),
        ParamDef::new("gamma", ParamScale::Log, false),
        ParamDef::new("omega", ParamScale::Log, false),
        ParamDef::new("mu", ParamScale::Log, false),
        ParamDef::new("w", ParamScale::Identity, false),
        ParamDef::new("pop", ParamScale::Identity, false),
        ParamDef::new("kappa", ParamScale::Logit, false),
    ])
    .expect("static definitions are valid")
}

/// Declared default parameter point (documented in the README; the fixed
/// rates are conventions of this crate, not estimates): mean infectious
/// period 1 week, mean immunity 1 year, 80-year lifetime, annual forcing.
pub fn sirs_defaults(space: &Arc<ParamSpace>) -> ParamVector {
    ParamVector::new(
        Arc::clone(space),
        vec![
            2.5,               // beta
            0.3,               // rho
            3.0,               // phi
            0.01,              // sigma_sq
            0.1,               // psi
            1.0,               // gamma
            1.0 / 52.0,        // omega
            1.0 / (80.0 * 52.0), // mu
            52.0,              // w
            50_000.0,          // pop
            1.0,               // kappa
        ],
    )
    .expect("defaults are in-domain")
}

/// Seasonally forced transmission rate
/// `beta * (1 + rho * cos(2 pi t / w + phi))`, which stays within
/// `[(1 - rho) beta, (1 + rho) beta]`.
pub fn seasonal_beta(t: f64, beta: f64, rho: f64, w: f64, phi: f64) -> f64 {
    beta * (1.0 + rho * (std::f64::consts::TAU * t / w + phi).cos())
}

/// Infection (seasonal, noise-scaled, counts incidence), recovery, waning,
/// and turnover transitions I->S and R->S implementing replacement deaths.
pub fn sirs_reactions(space: &ParamSpace) -> Result<ReactionSet> {
    let beta = space.require("beta")?;
    let rho = space.require("rho")?;
    let phi = space.require("phi")?;
    let gamma = space.require("gamma")?;
    let omega = space.require("omega")?;
    let mu = space.require("mu")?;
    let w = space.require("w")?;
    let pop = space.require("pop")?;
    Ok(ReactionSet::new(
        vec![
            Reaction::new("infection", Some(S), Some(I), move |x, p, t| {
                seasonal_beta(t, p[beta], p[rho], p[w], p[phi]) * x.counts[I] * x.counts[S]
                    / p[pop]
            })
            .with_incidence()
            .scaled_by_noise(),
            Reaction::new("recovery", Some(I), Some(R), move |x, p, _t| {
                p[gamma] * x.counts[I]
            }),
            Reaction::new("waning", Some(R), Some(S), move |x, p, _t| {
                p[omega] * x.counts[R]
            }),
            Reaction::new("turnover_I", Some(I), Some(S), move |x, p, _t| {
                p[mu] * x.counts[I]
            }),
            Reaction::new("turnover_R", Some(R), Some(S), move |x, p, _t| {
                p[mu] * x.counts[R]
            }),
        ],
        3,
    ))
}

/// Endemic equilibrium of the unforced (rho = 0, no noise) skeleton, rounded
/// to integers summing to the population. Requires beta/(gamma+mu) > 1.
pub fn sirs_stationary_init(params: &ParamVector) -> Result<StateVector> {
    stationary_state(
        params.get("beta")?,
        params.get("gamma")?,
        params.get("omega")?,
        params.get("mu")?,
        params.get("pop")?,
    )
}

fn stationary_state(beta: f64, gamma: f64, omega: f64, mu: f64, n: f64) -> Result<StateVector> {
    let r0 = beta / (gamma + mu);
    if r0 <= 1.0 {
        return Err(Error::Model(format!(
            "no endemic equilibrium: beta/(gamma+mu) = {r0:.4} <= 1"
        )));
    }
    let s_star = n * (gamma + mu) / beta;
    let i_star = (omega + mu) * (n - s_star) / (gamma + omega + mu);
    let s = s_star.round();
    let i = i_star.round().max(1.0);
    let r = (n - s - i).max(0.0);
    Ok(StateVector::new(vec![s, i, r], 0.0))
}

/// Skeleton with forcing but unit noise. The turnover influx uses the
/// current total occupancy, so conservation holds identically.
pub fn sirs_skeleton(space: &ParamSpace) -> Result<Arc<SkeletonFn>> {
    let beta = space.require("beta")?;
    let rho = space.require("rho")?;
    let phi = space.require("phi")?;
    let gamma = space.require("gamma")?;
    let omega = space.require("omega")?;
    let mu = space.require("mu")?;
    let w = space.require("w")?;
    let pop = space.require("pop")?;
    Ok(Arc::new(move |y: &[f64], p: &[f64], t: f64, out: &mut [f64]| {
        let force = seasonal_beta(t, p[beta], p[rho], p[w], p[phi]) * y[I] * y[S] / p[pop];
        let recover = p[gamma] * y[I];
        let wane = p[omega] * y[R];
        out[S] = p[mu] * (y[I] + y[R]) - force + wane;
        out[I] = force - recover - p[mu] * y[I];
        out[R] = recover - wane - p[mu] * y[R];
        out[3] = force;
    }))
}

pub fn sirs_model(method: SimMethod, tau_sim: f64) -> Result<PompModel> {
    let space = Arc::new(sirs_space());
    let reactions = Arc::new(sirs_reactions(&space)?);
    let skeleton = sirs_skeleton(&space)?;
    let i_sigma = space.require("sigma_sq")?;
    let i_psi = space.require("psi")?;
    let i_kappa = space.require("kappa")?;

    let init: Box<InitFn> = {
        let i_beta = space.require("beta")?;
        let i_gamma = space.require("gamma")?;
        let i_omega = space.require("omega")?;
        let i_mu = space.require("mu")?;
        let i_pop = space.require("pop")?;
        Box::new(move |p, t0, _rng| {
            let mut state = stationary_state(p[i_beta], p[i_gamma], p[i_omega], p[i_mu], p[i_pop])?;
            state.t = t0;
            Ok(state)
        })
    };

    let step: Box<StepFn> = match method {
        SimMethod::TauLeap => {
            let rs = Arc::clone(&reactions);
            Box::new(move |state, p, t, tau, rng| {
                let xi = if p[i_sigma] > 0.0 {
                    gamma_noise_increment(tau, p[i_sigma], rng) / tau
                } else {
                    1.0
                };
                tau_leap_step(state, &rs, p, t, tau, xi, rng)
            })
        }
        SimMethod::Gillespie => {
            // noise and the seasonal rate are held fixed within a substep
            let rs = Arc::clone(&reactions);
            Box::new(move |state, p, _t, tau, rng| {
                let xi = if p[i_sigma] > 0.0 {
                    gamma_noise_increment(tau, p[i_sigma], rng) / tau
                } else {
                    1.0
                };
                let t_end = state.t + tau;
                gillespie_advance(state, &rs, p, t_end, xi, rng)
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
        negbin_obs_logdensity(y, state.incidence, p[i_psi], p[i_kappa])
    });
    let obs_sample: Box<ObsSampleFn> = Box::new(move |state, p, rng| {
        sample_negbin(p[i_kappa] * state.incidence, p[i_psi], rng)
    });

    PompModel::new(
        "sirs",
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
