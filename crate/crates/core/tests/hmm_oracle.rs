//! Filter correctness against an exact forward-algorithm likelihood.

mod common;

use common::*;
use pompkit_core::{naive_mc_loglik, particle_filter, PfilterSettings};

#[test]
fn particle_filter_is_unbiased_on_the_hmm() {
    let model = hmm_model();
    let params = hmm_params(&model);
    let data = hmm_data();
    let exact = hmm_forward_loglik(&data);

    let settings = PfilterSettings::with_particles(200);
    let ratios: Vec<f64> = (0..400)
        .map(|seed| {
            let r = particle_filter(&model, &data, &params, &settings, 1000 + seed).unwrap();
            (r.loglik - exact).exp()
        })
        .collect();
    let m = mean(&ratios);
    let se = (variance(&ratios) / ratios.len() as f64).sqrt();
    assert!(
        (m - 1.0).abs() < 3.0 * se,
        "likelihood-scale ratio {m:.4} departs from 1 by more than 3 se ({:.4})",
        3.0 * se
    );
}

#[test]
fn naive_monte_carlo_is_unbiased_on_the_hmm() {
    let model = hmm_model();
    let params = hmm_params(&model);
    let data = hmm_data();
    let exact = hmm_forward_loglik(&data);

    let ratios: Vec<f64> = (0..400)
        .map(|seed| {
            let r = naive_mc_loglik(&model, &data, &params, 200, 5000 + seed).unwrap();
            (r.loglik - exact).exp()
        })
        .collect();
    let m = mean(&ratios);
    let se = (variance(&ratios) / ratios.len() as f64).sqrt();
    assert!((m - 1.0).abs() < 3.0 * se, "ratio {m:.4}, 3se {:.4}", 3.0 * se);
}

#[test]
fn filter_variance_is_non_increasing_in_particle_count() {
    let model = hmm_model();
    let params = hmm_params(&model);
    let data = hmm_data();

    let var_at = |j: usize, base: u64| {
        let settings = PfilterSettings::with_particles(j);
        let lls: Vec<f64> = (0..100)
            .map(|s| {
                particle_filter(&model, &data, &params, &settings, base + s)
                    .unwrap()
                    .loglik
            })
            .collect();
        (variance(&lls), se_of_variance(&lls))
    };
    let (v50, se50) = var_at(50, 10_000);
    let (v200, se200) = var_at(200, 20_000);
    let (v800, se800) = var_at(800, 30_000);
    assert!(
        v200 <= v50 + se50 + se200,
        "var(J=200) = {v200:.5} vs var(J=50) = {v50:.5}"
    );
    assert!(
        v800 <= v200 + se200 + se800,
        "var(J=800) = {v800:.5} vs var(J=200) = {v200:.5}"
    );
}
