//! Threshold-energy detectors.
//!
//! A detector occupies a set of grid cells, integrates the signal's energy
//! density over that aperture, and clicks every time the collected energy
//! reaches its threshold `epsilon`. On a click the accumulator resets to
//! zero; the overshoot beyond `epsilon` (at most one step's deposit) is
//! discarded, mirroring calibration that rejects realizations deviating from
//! the threshold portion. There is no dead time.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::numerics::CompensatedSum;

/// Detection threshold, either explicit or calibrated against the signal:
/// `epsilon = C * ||psi||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Epsilon(f64),
    Calibration(f64),
}

impl Threshold {
    /// Resolve to a concrete threshold energy for the given signal shape.
    pub fn resolve(&self, psi: &FieldState) -> Result<f64> {
        match *self {
            Threshold::Epsilon(eps) => {
                if eps > 0.0 && eps.is_finite() {
                    Ok(eps)
                } else {
                    Err(Error::InvalidConfig(format!(
                        "threshold energy must be positive, got {eps}"
                    )))
                }
            }
            Threshold::Calibration(c) => calibrate(c, psi),
        }
    }
}

/// Calibrated threshold `epsilon = C * ||psi||^2`.
pub fn calibrate(c: f64, psi: &FieldState) -> Result<f64> {
    if c <= 0.0 || !c.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "calibration constant must be positive, got {c}"
        )));
    }
    let norm_sq = psi.norm_squared();
    if norm_sq <= 0.0 {
        return Err(Error::DegenerateFieldState);
    }
    Ok(c * norm_sq)
}

/// Static description of one detector: its aperture and threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub id: String,
    /// Grid cells covered by the aperture (total volume `region.len() * dV`).
    pub region: Vec<usize>,
    /// Per-detector override; when `None` the experiment-level threshold
    /// applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<Threshold>,
}

impl DetectorConfig {
    pub fn new(id: impl Into<String>, region: Vec<usize>) -> Self {
        Self {
            id: id.into(),
            region,
            threshold: None,
        }
    }
}

/// Mutable run state: the energy accumulator and the click log.
#[derive(Debug, Clone, Default)]
pub struct DetectorState {
    accumulated: f64,
    clicks: Vec<f64>,
}

impl DetectorState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Energy collected since the last click.
    pub fn accumulated(&self) -> f64 {
        self.accumulated
    }

    /// Click timestamps (seconds), strictly increasing.
    pub fn clicks(&self) -> &[f64] {
        &self.clicks
    }

    /// Deposit one step of collected energy:
    /// `(dt / gamma) * sum_{cells} |phi(s, x)|^2 dV`.
    pub fn accumulate(&mut self, phi_on_region: &[Complex64], dv: f64, dt: f64, gamma: f64) {
        let mut density = CompensatedSum::new();
        for phi in phi_on_region {
            density.add(phi.norm_sqr());
        }
        self.deposit(dt / gamma * density.value() * dv);
    }

    /// Deposit an already-integrated energy increment.
    pub fn deposit(&mut self, energy: f64) {
        debug_assert!(energy >= 0.0);
        self.accumulated += energy;
    }

    /// If the accumulator has reached `epsilon`, record a click at `now`,
    /// reset, and return the click time.
    pub fn poll_click(&mut self, epsilon: f64, now: f64) -> Option<f64> {
        if self.accumulated >= epsilon {
            debug_assert!(
                self.clicks.last().is_none_or(|&last| last < now),
                "click timestamps must be strictly increasing"
            );
            self.accumulated = 0.0;
            self.clicks.push(now);
            Some(now)
        } else {
            None
        }
    }
}
