//! Count observation models: Poisson and negative binomial, both with a
//! reporting probability scaling the mean. Missing observations contribute a
//! log-likelihood of exactly zero.

use rand_distr::{Distribution, Gamma, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::rng::StreamRng;

/// log Poisson(y; kappa * h). A zero mean is a point mass at zero: 0.0 for
/// y = 0, -inf for y > 0.
pub fn poisson_obs_logdensity(y: Option<u64>, h: f64, kappa: f64) -> f64 {
    let y = match y {
        None => return 0.0,
        Some(y) => y,
    };
    poisson_logpmf(y, kappa * h)
}

pub fn poisson_logpmf(y: u64, mean: f64) -> f64 {
    if mean <= 0.0 {
        return if y == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    y as f64 * mean.ln() - mean - ln_gamma(y as f64 + 1.0)
}

pub fn sample_poisson(mean: f64, rng: &mut StreamRng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

/// log NegBin(y; mean kappa * h, dispersion psi), parameterized so the
/// variance is `m + psi m^2`. The limit psi -> 0 recovers the Poisson.
pub fn negbin_obs_logdensity(y: Option<u64>, h: f64, psi: f64, kappa: f64) -> f64 {
    let y = match y {
        None => return 0.0,
        Some(y) => y,
    };
    negbin_logpmf(y, kappa * h, psi)
}

pub fn negbin_logpmf(y: u64, mean: f64, psi: f64) -> f64 {
    debug_assert!(psi > 0.0);
    if mean <= 0.0 {
        return if y == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let r = 1.0 / psi;
    let yf = y as f64;
    ln_gamma(yf + r) - ln_gamma(r) - ln_gamma(yf + 1.0) + r * (r / (r + mean)).ln()
        + yf * (mean / (r + mean)).ln()
}

/// Gamma-Poisson mixture draw matching [`negbin_logpmf`].
pub fn sample_negbin(mean: f64, psi: f64, rng: &mut StreamRng) -> u64 {
    debug_assert!(psi > 0.0);
    if mean <= 0.0 {
        return 0;
    }
    let shape = 1.0 / psi;
    let lambda = Gamma::new(shape, psi * mean)
        .expect("valid gamma parameters")
        .sample(rng);
    sample_poisson(lambda, rng)
}
