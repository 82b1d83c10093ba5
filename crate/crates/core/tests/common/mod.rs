//! Shared fixtures: a two-state hidden Markov chain with an exact
//! forward-algorithm likelihood, and canonical SIR outbreak data.

#![allow(dead_code)]

use std::sync::Arc;

use pompkit_core::model::{InitFn, ObsDensityFn, ObsSampleFn, PompModel, StepFn};
use pompkit_core::{ParamSpace, ParamVector, SimMethod, StateVector, TimeSeries};
use rand::Rng;

/// Transition matrix, emission P(y=1 | state), initial distribution.
pub const HMM_TRANS: [[f64; 2]; 2] = [[0.9, 0.1], [0.2, 0.8]];
pub const HMM_EMIT_ONE: [f64; 2] = [0.2, 0.7];
pub const HMM_INIT: [f64; 2] = [0.5, 0.5];
pub const HMM_OBS: [u64; 10] = [1, 0, 0, 1, 1, 0, 1, 0, 0, 1];

pub fn hmm_data() -> TimeSeries {
    TimeSeries::new(
        (1..=HMM_OBS.len()).map(|n| n as f64).collect(),
        HMM_OBS.iter().map(|&y| Some(y)).collect(),
    )
    .unwrap()
}

fn emit_logpmf(y: Option<u64>, state: usize) -> f64 {
    match y {
        None => 0.0,
        Some(1) => HMM_EMIT_ONE[state].ln(),
        Some(0) => (1.0 - HMM_EMIT_ONE[state]).ln(),
        Some(_) => f64::NEG_INFINITY,
    }
}

/// A POMP whose latent state is the index of a two-state Markov chain
/// stepped once per unit interval.
pub fn hmm_model() -> PompModel {
    let space = Arc::new(ParamSpace::new(vec![]).unwrap());
    let init: Box<InitFn> = Box::new(|_p, t0, rng| {
        let s = usize::from(rng.random::<f64>() >= HMM_INIT[0]);
        Ok(StateVector::new(vec![s as f64], t0))
    });
    let step: Box<StepFn> = Box::new(|state, _p, _t, tau, rng| {
        assert!((tau - 1.0).abs() < 1e-9, "chain steps once per interval");
        let s = state.counts[0] as usize;
        let u = rng.random::<f64>();
        state.counts[0] = f64::from(u8::from(u >= HMM_TRANS[s][0]));
        Ok(())
    });
    let obs_logdensity: Box<ObsDensityFn> =
        Box::new(|y, state, _p| emit_logpmf(y, state.counts[0] as usize));
    let obs_sample: Box<ObsSampleFn> = Box::new(|state, _p, rng| {
        u64::from(rng.random::<f64>() < HMM_EMIT_ONE[state.counts[0] as usize])
    });
    PompModel::new(
        "hmm2",
        vec!["state".into()],
        space,
        0.0,
        1.0,
        false,
        init,
        step,
        obs_logdensity,
        obs_sample,
        None,
    )
    .unwrap()
}

pub fn hmm_params(model: &PompModel) -> ParamVector {
    ParamVector::new(Arc::clone(model.space()), vec![]).unwrap()
}

/// Exact log-likelihood of the observation sequence by the forward
/// algorithm.
pub fn hmm_forward_loglik(data: &TimeSeries) -> f64 {
    let mut alpha = HMM_INIT;
    let mut loglik = 0.0;
    for i in 0..data.len() {
        let mut predicted = [0.0f64; 2];
        for s in 0..2 {
            for (t, p) in predicted.iter_mut().enumerate() {
                *p += alpha[s] * HMM_TRANS[s][t];
            }
        }
        let mut step_lik = 0.0;
        let mut filtered = [0.0f64; 2];
        for s in 0..2 {
            filtered[s] = predicted[s] * emit_logpmf(data.value(i), s).exp();
            step_lik += filtered[s];
        }
        loglik += step_lik.ln();
        for f in &mut filtered {
            *f /= step_lik;
        }
        alpha = filtered;
    }
    loglik
}

/// Master seed of the canonical SIR experiment: a major outbreak at
/// beta = 1, gamma = 0.5, N = 10000, one initial infective.
pub const SIR_DATA_SEED: u64 = 20_258_123;

/// Canonical 50-week case series simulated exactly (Gillespie).
pub fn sir_outbreak_data() -> TimeSeries {
    let model = pompkit_core::sir_model(SimMethod::Gillespie, 0.01).unwrap();
    let params = pompkit_core::models::sir::sir_defaults(model.space());
    let grid = TimeSeries::weekly_grid(50);
    let path = pompkit_core::simulate_path(&model, &params, grid.times(), SIR_DATA_SEED).unwrap();
    TimeSeries::new(
        grid.times().to_vec(),
        path.observations.iter().map(|&y| Some(y)).collect(),
    )
    .unwrap()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Standard error of the sample variance from the fourth central moment.
pub fn se_of_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let v = variance(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    ((m4 - v * v).max(0.0) / n).sqrt()
}
