//! Click statistics of threshold detectors driven by classical random
//! signals.
//!
//! A complex field shape `psi` on a spatial grid is turned into an ergodic
//! random signal `phi(s, x) = eta(s) psi(x)` whose single-time covariance is
//! the rank-1 operator built from `psi`. Threshold detectors integrate the
//! signal's energy over their apertures and click whenever the collected
//! energy reaches a calibrated threshold. The emergent click statistics
//! reproduce the Born weights `|Psi(x)|^2 dV` of the normalized shape,
//! stay invariant under threshold changes (while the click frequency scales
//! as `1/epsilon`), and suppress double clicks below the `T / 2C` envelope.
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run --release --example born_rule
//! cargo run --release --example click_period
//! cargo run --release --example epsilon_scan
//! cargo run --release --example coincidences
//! cargo run --release --example ergodicity
//! cargo run --release --example basis_measurement
//! ```
//!
//! or with the `pcsft` binary: `pcsft run --preset two_peak --out results/`.

pub mod cli;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod field;
pub mod numerics;
pub mod observables;
pub mod scenario;
pub mod signal;

pub use detector::{calibrate, DetectorConfig, DetectorState, Threshold};
pub use error::{Error, Result};
pub use experiment::{
    coincidence_scan, count_coincidences, double_click_bound, epsilon_invariance_scan,
    run_basis_measurement, run_detection, ClickRecord, CoincidenceScanReport, DetectorStats,
    EpsilonScanReport, ExperimentConfig, RunStatistics,
};
pub use field::{FieldState, Grid, WaveFunction};
pub use observables::{
    ensemble_average, ergodicity_report, position_density, time_average, time_average_quadratic,
    ErgodicityReport, QuadraticObservable, SampleAverage,
};
pub use scenario::{Scenario, PRESET_NAMES};
pub use signal::{sample_ensemble, DriverMode, ProcessParams, SignalDriver};
