use crate::error::{Error, Result};
use crate::params::{AmplitudeVector, SystemParams};

/// Resonator amplitudes sampled on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<AmplitudeVector>,
    params: SystemParams,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        states: Vec<AmplitudeVector>,
        params: SystemParams,
    ) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::InvalidGrid(format!(
                "{} times but {} states",
                times.len(),
                states.len()
            )));
        }
        validate_increasing(&times)?;
        if let Some(bad) = states.iter().find(|s| s.len() != params.n_resonators()) {
            return Err(Error::LengthMismatch {
                expected: params.n_resonators(),
                got: bad.len(),
            });
        }
        Ok(Self {
            times,
            states,
            params,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[AmplitudeVector] {
        &self.states
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &AmplitudeVector)> {
        self.times.last().copied().zip(self.states.last())
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &AmplitudeVector)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

pub(crate) fn validate_increasing(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidGrid("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("non-finite time".into()));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!(
            "times must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// `count` evenly spaced points on `[0, t_max]`, both ends included.
pub fn uniform_grid(t_max: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || t_max <= 0.0 || !t_max.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "need count >= 2 and t_max > 0 (got {count}, {t_max})"
        )));
    }
    let step = t_max / (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count).map(|i| i as f64 * step).collect();
    grid[count - 1] = t_max;
    Ok(grid)
}
