//! Observed case-count time series.

use crate::error::{Error, Result};

/// Count observations at strictly increasing times; `None` marks a missing
/// value (the time point is still simulated across, it just contributes no
/// information).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<Option<u64>>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<Option<u64>>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Data("empty time series".into()));
        }
        if times.len() != values.len() {
            return Err(Error::Data(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        for (i, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::Data(format!(
                    "observation times must be strictly increasing (rows {} and {})",
                    i + 1,
                    i + 2
                )));
            }
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Data("non-finite observation time".into()));
        }
        Ok(Self { times, values })
    }

    /// Weekly observation grid t_n = 1..=n_weeks with all values missing;
    /// useful as a simulation skeleton.
    pub fn weekly_grid(n_weeks: usize) -> Self {
        Self {
            times: (1..=n_weeks).map(|n| n as f64).collect(),
            values: vec![None; n_weeks],
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Option<u64>] {
        &self.values
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn value(&self, i: usize) -> Option<u64> {
        self.values[i]
    }

    /// Copy with observation `i` replaced (e.g. blanked to missing).
    pub fn with_value(&self, i: usize, value: Option<u64>) -> Self {
        let mut out = self.clone();
        out.values[i] = value;
        out
    }

    /// Copy with row `i` removed entirely.
    pub fn without_row(&self, i: usize) -> Result<Self> {
        let mut times = self.times.clone();
        let mut values = self.values.clone();
        times.remove(i);
        values.remove(i);
        Self::new(times, values)
    }
}
