//! Latent process state.

/// Compartment occupancies plus the incidence accumulator.
///
/// Counts are stored as `f64`: stochastic steppers only ever write exact
/// integers into them (every update is a draw of whole individuals), while
/// deterministic-skeleton steppers use the same state with real values.
/// Compartment names live on the model, which resolves them to indices once.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    /// Occupancy per compartment.
    pub counts: Vec<f64>,
    /// Accumulated new infections since the last observation time (the
    /// reporting-interval incidence). Reset to zero after each recording.
    pub incidence: f64,
    /// Current time, weeks.
    pub t: f64,
}

impl StateVector {
    pub fn new(counts: Vec<f64>, t: f64) -> Self {
        Self {
            counts,
            incidence: 0.0,
            t,
        }
    }

    /// Total occupancy across compartments.
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn reset_incidence(&mut self) {
        self.incidence = 0.0;
    }

    pub fn is_valid(&self) -> bool {
        self.counts.iter().all(|c| c.is_finite() && *c >= 0.0)
            && self.incidence.is_finite()
            && self.incidence >= 0.0
    }
}
