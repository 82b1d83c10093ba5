//! Reaction networks for compartmental transmission models.

use crate::error::{Error, Result};
use crate::state::StateVector;

pub type RateFn = dyn Fn(&StateVector, &[f64], f64) -> f64 + Send + Sync;

/// One transition route. `source = None` models an influx (birth),
/// `dest = None` an efflux (death/removal from the system). The rate
/// function returns the absolute rate (events per week) at the given state,
/// natural-scale parameters and time.
pub struct Reaction {
    pub name: String,
    pub source: Option<usize>,
    pub dest: Option<usize>,
    /// Every firing adds one to the incidence accumulator.
    pub adds_incidence: bool,
    /// Rate is multiplied by the transmission-noise factor passed to the
    /// stepper (1.0 when the model carries no noise).
    pub noise_scaled: bool,
    rate: Box<RateFn>,
}

impl Reaction {
    pub fn new<F>(name: &str, source: Option<usize>, dest: Option<usize>, rate: F) -> Self
    where
        F: Fn(&StateVector, &[f64], f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            source,
            dest,
            adds_incidence: false,
            noise_scaled: false,
            rate: Box::new(rate),
        }
    }

    pub fn with_incidence(mut self) -> Self {
        self.adds_incidence = true;
        self
    }

    pub fn scaled_by_noise(mut self) -> Self {
        self.noise_scaled = true;
        self
    }
}

/// A set of reactions over a fixed compartment list.
pub struct ReactionSet {
    reactions: Vec<Reaction>,
    n_compartments: usize,
    /// Reaction indices grouped by source compartment (exit routes).
    by_source: Vec<Vec<usize>>,
    /// Reaction indices with no source (influxes).
    births: Vec<usize>,
}

impl ReactionSet {
    pub fn new(reactions: Vec<Reaction>, n_compartments: usize) -> Self {
        let mut by_source = vec![Vec::new(); n_compartments];
        let mut births = Vec::new();
        for (i, r) in reactions.iter().enumerate() {
            match r.source {
                Some(c) => by_source[c].push(i),
                None => births.push(i),
            }
        }
        Self {
            reactions,
            n_compartments,
            by_source,
            births,
        }
    }

    pub fn len(&self) -> usize {
        self.reactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    pub fn n_compartments(&self) -> usize {
        self.n_compartments
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn reaction(&self, i: usize) -> &Reaction {
        &self.reactions[i]
    }

    pub fn exit_routes(&self, compartment: usize) -> &[usize] {
        &self.by_source[compartment]
    }

    pub fn birth_reactions(&self) -> &[usize] {
        &self.births
    }

    /// Absolute rate of reaction `i`, noise factor applied where flagged.
    /// Negative or non-finite rates are model errors.
    pub fn rate(&self, i: usize, state: &StateVector, params: &[f64], t: f64, noise: f64) -> Result<f64> {
        let r = &self.reactions[i];
        let mut v = (r.rate)(state, params, t);
        if r.noise_scaled {
            v *= noise;
        }
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Model(format!(
                "reaction `{}` produced rate {v} at t = {t}",
                r.name
            )));
        }
        Ok(v)
    }
}
