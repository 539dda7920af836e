//! Time-dependent random signal generation.
//!
//! The signal is `phi(s, x) = eta(s) * psi(x)`: a fixed spatial shape
//! multiplied by a scalar complex driver with unit stationary second moment,
//! so the single-time covariance of `phi` is the rank-1 operator built from
//! `psi`. The driver is a complex Ornstein-Uhlenbeck process advanced with the
//! exact discrete-time update
//!
//! ```text
//! eta' = a * eta + sqrt(1 - a^2) * xi,   a = exp(-dt / tau_pq)
//! ```
//!
//! with `xi` circular complex Gaussian of unit variance. The update is exact
//! in law (no integration bias) and `tau_pq` is the fine correlation scale of
//! the signal, far below any measurement duration.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldState;

/// Parameters of the driving process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessParams {
    /// Correlation time of the driver (seconds). May be `f64::INFINITY` for a
    /// driver frozen at its initial draw.
    pub tau_pq: f64,
    /// Integration step (seconds). Must resolve the fine scale:
    /// `dt <= tau_pq / 10`.
    pub dt: f64,
    /// Time unit used to convert integrated energy density into collected
    /// energy (seconds).
    pub gamma: f64,
    /// Base RNG seed; replicas derive independent streams from it.
    pub seed: u64,
}

pub const DEFAULT_TAU_PQ: f64 = 1e-4;
pub const DEFAULT_GAMMA: f64 = 1.0;

impl Default for ProcessParams {
    fn default() -> Self {
        Self {
            tau_pq: DEFAULT_TAU_PQ,
            dt: DEFAULT_TAU_PQ / 10.0,
            gamma: DEFAULT_GAMMA,
            seed: 0,
        }
    }
}

impl ProcessParams {
    pub fn validate(&self) -> Result<()> {
        if self.tau_pq <= 0.0 || self.tau_pq.is_nan() {
            return Err(Error::InvalidProcessParams(format!(
                "tau_pq must be positive, got {}",
                self.tau_pq
            )));
        }
        if self.dt <= 0.0 || !self.dt.is_finite() {
            return Err(Error::InvalidProcessParams(format!(
                "dt must be positive and finite, got {}",
                self.dt
            )));
        }
        // small slack so dt = tau_pq / 10 survives decimal-to-binary rounding
        if self.dt > self.tau_pq / 10.0 * (1.0 + 1e-9) {
            return Err(Error::InvalidProcessParams(format!(
                "dt = {} does not resolve the fine scale: need dt <= tau_pq / 10 = {}",
                self.dt,
                self.tau_pq / 10.0
            )));
        }
        if self.gamma <= 0.0 || !self.gamma.is_finite() {
            return Err(Error::InvalidProcessParams(format!(
                "gamma must be positive and finite, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// How the driver evolves during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverMode {
    /// Stationary stochastic driver (the physical case).
    #[default]
    Stochastic,
    /// `eta` pinned to 1: deterministic energy flow, used to expose the exact
    /// click period of a calibrated detector.
    FrozenUnit,
}

/// One circular complex Gaussian draw with `E|xi|^2 = 1`.
pub(crate) fn complex_standard_gaussian(rng: &mut ChaCha12Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// RNG stream for a replica: all replicas share the base seed and are
/// separated by the ChaCha stream counter, so they are independent and
/// reproducible from `(seed, replica)` alone.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Scalar ergodic driver `eta(s)`.
#[derive(Debug, Clone)]
pub struct SignalDriver {
    eta: Complex64,
    steps: u64,
    dt: f64,
    tau_pq: f64,
    decay: f64,
    diffusion: f64,
    mode: DriverMode,
    rng: ChaCha12Rng,
}

impl SignalDriver {
    /// Stochastic driver on the base stream (replica 0).
    pub fn new(params: &ProcessParams) -> Result<Self> {
        Self::with_stream(params, 0)
    }

    /// Stochastic driver on an explicit replica stream. `eta(0)` is drawn
    /// from the stationary law directly, so the trajectory is stationary from
    /// the first sample.
    pub fn with_stream(params: &ProcessParams, replica: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = replica_rng(params.seed, replica);
        let eta = complex_standard_gaussian(&mut rng);
        Ok(Self {
            eta,
            steps: 0,
            dt: params.dt,
            tau_pq: params.tau_pq,
            decay: (-params.dt / params.tau_pq).exp(),
            // 1 - a^2 = -expm1(-2 dt / tau); expm1 keeps the tiny-dt case exact
            diffusion: (-(-2.0 * params.dt / params.tau_pq).exp_m1()).sqrt(),
            mode: DriverMode::Stochastic,
            rng,
        })
    }

    /// Driver pinned to `eta = 1` for deterministic-limit checks.
    pub fn frozen_unit(params: &ProcessParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            eta: Complex64::ONE,
            steps: 0,
            dt: params.dt,
            tau_pq: params.tau_pq,
            decay: 1.0,
            diffusion: 0.0,
            mode: DriverMode::FrozenUnit,
            rng: replica_rng(params.seed, 0),
        })
    }

    pub fn for_mode(params: &ProcessParams, mode: DriverMode, replica: u64) -> Result<Self> {
        match mode {
            DriverMode::Stochastic => Self::with_stream(params, replica),
            DriverMode::FrozenUnit => Self::frozen_unit(params),
        }
    }

    /// Current driver value `eta(s)`.
    pub fn eta(&self) -> Complex64 {
        self.eta
    }

    /// Current time `s` (an exact multiple of `dt`).
    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn tau_pq(&self) -> f64 {
        self.tau_pq
    }

    pub fn mode(&self) -> DriverMode {
        self.mode
    }

    /// Advance one step of `dt` with the exact stationary update.
    pub fn step(&mut self) {
        if self.mode == DriverMode::Stochastic {
            let xi = complex_standard_gaussian(&mut self.rng);
            self.eta = self.eta * self.decay + xi * self.diffusion;
        }
        self.steps += 1;
    }

    /// Signal value `phi(s, x_cell) = eta(s) * psi(x_cell)`.
    pub fn field_at(&self, psi: &FieldState, cell: usize) -> Complex64 {
        self.eta * psi.amplitude(cell)
    }

    /// Materialize the whole field `eta(s) * psi` into `out`, reusing its
    /// storage.
    pub fn field_into(&self, psi: &FieldState, out: &mut FieldState) {
        out.assign_scaled(psi, self.eta);
    }
}

/// `n` independent single-time realizations `phi_k = eta_k * psi` with
/// `eta_k` i.i.d. circular complex Gaussian of unit variance.
pub fn sample_ensemble(psi: &FieldState, n: usize, seed: u64) -> Vec<FieldState> {
    let mut rng = replica_rng(seed, 0);
    (0..n)
        .map(|_| psi.scaled(complex_standard_gaussian(&mut rng)))
        .collect()
}
