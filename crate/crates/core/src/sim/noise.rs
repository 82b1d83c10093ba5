//! Gamma white noise on the transmission rate.

use rand_distr::{Distribution, Gamma};

use crate::rng::StreamRng;

/// Increment of the integrated noise process over `tau`: a gamma draw with
/// shape `tau / sigma_sq` and scale `sigma_sq`, so the increment has mean
/// `tau` and variance `tau * sigma_sq`. With `sigma_sq = 0` the process is
/// degenerate and the increment is exactly `tau` (no randomness consumed).
/// The multiplicative noise factor applied to a rate over the step is
/// `increment / tau`.
pub fn gamma_noise_increment(tau: f64, sigma_sq: f64, rng: &mut StreamRng) -> f64 {
    debug_assert!(tau > 0.0 && sigma_sq >= 0.0);
    if sigma_sq == 0.0 {
        return tau;
    }
    Gamma::new(tau / sigma_sq, sigma_sq)
        .expect("valid gamma parameters")
        .sample(rng)
}
