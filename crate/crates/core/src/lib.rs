//! Simulation-based maximum-likelihood inference for partially observed
//! Markov process (POMP) epidemic models: stochastic compartmental
//! simulators (exact Gillespie, Euler-multinomial tau-leaping), a bootstrap
//! particle filter for likelihood evaluation, iterated filtering for
//! maximization, and Monte-Carlo-adjusted profile confidence intervals.

pub mod data;
pub mod error;
pub mod mcap;
pub mod mif2;
pub mod model;
pub mod models;
pub mod params;
pub mod pfilter;
pub mod profile;
pub mod rng;
pub mod sim;
pub mod state;

pub use data::TimeSeries;
pub use error::{Error, Result};
pub use mcap::{mcap, McapResult, McapSettings};
pub use mif2::{
    cooling_intensity, evaluate_candidates, mif2, mif2_multi_start, CandidateEval, Hypercube,
    Mif2Result, Mif2Run, Mif2Settings, ParamSwarm,
};
pub use model::{validate_model, PompModel, ValidationReport};
pub use models::{build_model, sir_model, sirs_model};
pub use params::{ParamDef, ParamScale, ParamSpace, ParamVector, TransformedVector};
pub use pfilter::{
    effective_sample_size, naive_mc_loglik, particle_filter, resample, FilterResult, NaiveResult,
    PfilterSettings, ResampleScheme,
};
pub use profile::{profile_auto, profile_likelihood, ProfileMcap, ProfilePoint, ProfileSettings};
pub use rng::{derive_seed, stream, StreamRng};
pub use sim::{
    euler_multinomial_exits, gamma_noise_increment, gillespie_step, simulate_path, Reaction,
    ReactionSet, SimMethod, SimulatedPath,
};
pub use state::StateVector;
