//! Sample-path generation for the Markov transmission process.

mod gillespie;
mod noise;
mod path;
mod reactions;
mod tauleap;

pub use gillespie::{gillespie_advance, gillespie_step};
pub use noise::gamma_noise_increment;
pub use path::{simulate_path, SimulatedPath};
pub use reactions::{Reaction, ReactionSet};
pub use tauleap::{euler_multinomial_exits, tau_leap_step};

/// Process simulation method used to build a model's stepper.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMethod {
    /// Exact event-by-event simulation.
    Gillespie,
    /// Euler-multinomial tau-leaping at the model's `tau_sim`.
    TauLeap,
    /// Deterministic skeleton integrated with fixed-step RK4 (a degenerate
    /// process useful for diagnostics and exact likelihood checks).
    Skeleton,
}

impl SimMethod {
    pub fn parse(s: &str) -> crate::error::Result<Self> {
        match s {
            "gillespie" => Ok(SimMethod::Gillespie),
            "tauleap" => Ok(SimMethod::TauLeap),
            "skeleton" => Ok(SimMethod::Skeleton),
            other => Err(crate::error::Error::Config(format!(
                "unknown simulation method `{other}` (expected gillespie|tauleap|skeleton)"
            ))),
        }
    }
}
