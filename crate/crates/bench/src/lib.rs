//! Shared fixtures for the benchmarks.

use pompkit_core::models::sir::sir_defaults;
use pompkit_core::{simulate_path, sir_model, ParamVector, PompModel, SimMethod, TimeSeries};

/// Canonical 50-week outbreak series used across benchmarks.
pub fn outbreak() -> (PompModel, ParamVector, TimeSeries) {
    let model = sir_model(SimMethod::TauLeap, 0.01).unwrap();
    let params = sir_defaults(model.space());
    let generator = sir_model(SimMethod::Gillespie, 0.01).unwrap();
    let grid = TimeSeries::weekly_grid(50);
    let path = simulate_path(&generator, &params, grid.times(), 20_258_123).unwrap();
    let data = TimeSeries::new(
        grid.times().to_vec(),
        path.observations.iter().map(|&y| Some(y)).collect(),
    )
    .unwrap();
    (model, params, data)
}
