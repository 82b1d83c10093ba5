//! Reference epidemic models and observation densities.

pub mod obs;
pub mod sir;
pub mod sirs;

use crate::error::{Error, Result};
use crate::model::{PompModel, SkeletonFn};
use crate::sim::SimMethod;
use crate::state::StateVector;

pub use sir::sir_model;
pub use sirs::sirs_model;

/// Builds a model by registry name (the names addressable from run configs).
pub fn build_model(name: &str, method: SimMethod, tau_sim: f64) -> Result<PompModel> {
    match name {
        "sir" => sir_model(method, tau_sim),
        "sirs" => sirs_model(method, tau_sim),
        other => Err(Error::Config(format!(
            "unknown model `{other}` (expected sir|sirs)"
        ))),
    }
}

const MAX_DIM: usize = 16;

/// One fixed-step RK4 update of (compartments, incidence) under a skeleton.
pub(crate) fn rk4_step(skel: &SkeletonFn, state: &mut StateVector, params: &[f64], t: f64, h: f64) {
    let c = state.counts.len();
    let d = c + 1;
    assert!(d <= MAX_DIM);
    let mut y = [0.0f64; MAX_DIM];
    y[..c].copy_from_slice(&state.counts);
    y[c] = state.incidence;

    let mut k1 = [0.0f64; MAX_DIM];
    let mut k2 = [0.0f64; MAX_DIM];
    let mut k3 = [0.0f64; MAX_DIM];
    let mut k4 = [0.0f64; MAX_DIM];
    let mut tmp = [0.0f64; MAX_DIM];

    skel(&y[..c], params, t, &mut k1[..d]);
    for i in 0..d {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    skel(&tmp[..c], params, t + 0.5 * h, &mut k2[..d]);
    for i in 0..d {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    skel(&tmp[..c], params, t + 0.5 * h, &mut k3[..d]);
    for i in 0..d {
        tmp[i] = y[i] + h * k3[i];
    }
    skel(&tmp[..c], params, t + h, &mut k4[..d]);
    for i in 0..d {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }

    state.counts.copy_from_slice(&y[..c]);
    state.incidence = y[c];
}
