//! Full detection runs.
//!
//! An experiment drives one random signal over `[0, T]`, feeds every detector
//! each step, logs clicks, and aggregates counts into frequencies and
//! detection probabilities. Because the signal factorizes as
//! `phi(s, x) = eta(s) psi(x)`, each detector's energy deposit per step is
//! `|eta|^2 * (dt / gamma) * w` with a constant spatial weight `w`; position
//! detectors and generalized-basis "virtual detectors" differ only in how the
//! weight is computed, and share the integration loop.
//!
//! Replicas are independent repetitions with RNG streams derived from
//! `(seed, replica)`; they may run concurrently and their statistics are
//! merged in replica order, so results do not depend on the thread count.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::detector::{DetectorConfig, DetectorState, Threshold};
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::numerics::{linear_fit, CompensatedSum, RunningStats};
use crate::signal::{DriverMode, ProcessParams, SignalDriver};

/// Default coincidence window, in integration steps.
pub const DEFAULT_WINDOW_STEPS: f64 = 10.0;

/// Full description of a detection run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Signal shape; its rank-1 covariance is what the detectors sample.
    pub psi: FieldState,
    pub detectors: Vec<DetectorConfig>,
    /// Threshold applied to detectors without a per-detector override, and to
    /// every virtual detector of a basis measurement.
    pub threshold: Threshold,
    /// Run duration T (seconds). Must reach the ergodic regime:
    /// `T >= 1e4 * tau_pq` for a fluctuating driver.
    pub duration: f64,
    pub process: ProcessParams,
    /// Coincidence window w (seconds), at least one step.
    pub coincidence_window: f64,
    pub replicas: u32,
    pub driver_mode: DriverMode,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.process.validate()?;
        if self.psi.norm_squared() <= 0.0 {
            return Err(Error::DegenerateFieldState);
        }
        if self.detectors.is_empty() {
            return Err(Error::InvalidConfig(
                "experiment needs at least one detector".into(),
            ));
        }
        let mut ids = HashSet::new();
        let mut claimed = HashSet::new();
        for det in &self.detectors {
            if !ids.insert(det.id.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate detector id {:?}",
                    det.id
                )));
            }
            if det.region.is_empty() {
                return Err(Error::EmptyRegion);
            }
            for &cell in &det.region {
                self.psi.grid().check_cell(cell)?;
                if !claimed.insert(cell) {
                    return Err(Error::OverlappingRegions { cell });
                }
            }
            det.threshold
                .as_ref()
                .unwrap_or(&self.threshold)
                .resolve(&self.psi)?;
        }
        let ergodic_needed =
            self.driver_mode == DriverMode::Stochastic && self.process.tau_pq.is_finite();
        if ergodic_needed {
            let required = 1e4 * self.process.tau_pq;
            if self.duration < required * (1.0 - 1e-9) {
                return Err(Error::InvalidConfig(format!(
                    "duration {} s is below the ergodic regime (need T >= 1e4 tau_pq = {} s)",
                    self.duration, required
                )));
            }
        }
        if self.duration <= 0.0 || !self.duration.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "duration must be positive and finite, got {}",
                self.duration
            )));
        }
        if (self.duration / self.process.dt).round() < 1.0 {
            return Err(Error::InvalidConfig(
                "duration is shorter than one integration step".into(),
            ));
        }
        if self.coincidence_window < self.process.dt * (1.0 - 1e-9) {
            return Err(Error::InvalidConfig(format!(
                "coincidence window {} s must be at least one step ({} s)",
                self.coincidence_window, self.process.dt
            )));
        }
        if self.replicas == 0 {
            return Err(Error::InvalidConfig("need at least one replica".into()));
        }
        Ok(())
    }

    /// Energy carried by `psi` inside one detector's aperture.
    fn region_energy(&self, region: &[usize]) -> f64 {
        let mut sum = CompensatedSum::new();
        for &cell in region {
            sum.add(self.psi.amplitude(cell).norm_sqr());
        }
        sum.value() * self.psi.grid().cell_volume()
    }
}

/// One timestamped click.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClickRecord {
    /// Index into the run's detector list.
    pub detector: usize,
    /// Click time within the replica's own `[0, T]` (seconds).
    pub time: f64,
    pub replica: u32,
}

/// Aggregated per-detector outcome of a run.
#[derive(Debug, Clone, Serialize)]
pub struct DetectorStats {
    pub id: String,
    /// Click count summed over replicas (n_T).
    pub clicks: u64,
    /// Click frequency `lambda = gamma * clicks / (T * replicas)`.
    pub frequency: f64,
    pub frequency_std_error: f64,
    /// Detection probability `P = clicks / total clicks`.
    pub probability: f64,
    pub probability_std_error: f64,
    /// Born oracle: `|Psi|^2 dV` summed over the aperture, renormalized over
    /// detector-covered cells.
    pub oracle_probability: f64,
}

/// Full outcome of a detection run.
#[derive(Debug, Clone, Serialize)]
pub struct RunStatistics {
    pub detectors: Vec<DetectorStats>,
    pub total_clicks: u64,
    /// Coincidences at the configured window.
    pub double_clicks: u64,
    pub duration: f64,
    pub replicas: u32,
    pub coincidence_window: f64,
    /// Click log ordered by replica, then time. Exported separately from the
    /// JSON summary.
    #[serde(skip)]
    pub clicks: Vec<ClickRecord>,
    /// `[replica][detector]` click counts behind the standard errors.
    #[serde(skip)]
    pub per_replica_counts: Vec<Vec<u64>>,
}

impl RunStatistics {
    /// Per-detector detection probabilities; errors if nothing ever clicked.
    pub fn detection_probabilities(&self) -> Result<Vec<f64>> {
        if self.total_clicks == 0 {
            return Err(Error::ZeroClicks);
        }
        Ok(self.detectors.iter().map(|d| d.probability).collect())
    }

    /// Click frequency of one detector by id.
    pub fn click_frequency(&self, id: &str) -> Result<f64> {
        self.detectors
            .iter()
            .find(|d| d.id == id)
            .map(|d| d.frequency)
            .ok_or_else(|| Error::UnknownDetector(id.to_string()))
    }

    pub fn detector(&self, id: &str) -> Option<&DetectorStats> {
        self.detectors.iter().find(|d| d.id == id)
    }
}

/// A detector reduced to what the integration loop needs.
struct WeightedDetector {
    id: String,
    /// Spatial energy weight: deposit per step is
    /// `(dt / gamma) |eta|^2 * weight`.
    weight: f64,
    epsilon: f64,
    oracle_probability: f64,
}

fn simulate_replica(
    detectors: &[WeightedDetector],
    process: &ProcessParams,
    mode: DriverMode,
    steps: u64,
    replica: u32,
) -> Vec<DetectorState> {
    let mut driver = SignalDriver::for_mode(process, mode, replica as u64)
        .expect("config validated before simulation");
    let mut states = vec![DetectorState::new(); detectors.len()];
    let coeff = process.dt / process.gamma;
    let dt = process.dt;
    for step in 0..steps {
        let pulse = driver.eta().norm_sqr() * coeff;
        // click timestamped at the end of the step that crossed the threshold
        let now = (step + 1) as f64 * dt;
        for (state, det) in states.iter_mut().zip(detectors) {
            state.deposit(pulse * det.weight);
            state.poll_click(det.epsilon, now);
        }
        driver.step();
    }
    states
}

fn run_weighted(
    detectors: Vec<WeightedDetector>,
    process: &ProcessParams,
    mode: DriverMode,
    duration: f64,
    coincidence_window: f64,
    replicas: u32,
) -> RunStatistics {
    let steps = (duration / process.dt).round() as u64;

    let outcomes: Vec<Vec<DetectorState>> = (0..replicas)
        .into_par_iter()
        .map(|replica| simulate_replica(&detectors, process, mode, steps, replica))
        .collect();

    // Merge in replica order: results are independent of the thread count.
    let n_det = detectors.len();
    let mut per_replica_counts = Vec::with_capacity(replicas as usize);
    let mut clicks = Vec::new();
    for (replica, states) in outcomes.iter().enumerate() {
        let counts: Vec<u64> = states.iter().map(|s| s.clicks().len() as u64).collect();
        let mut replica_clicks: Vec<ClickRecord> = states
            .iter()
            .enumerate()
            .flat_map(|(detector, state)| {
                state.clicks().iter().map(move |&time| ClickRecord {
                    detector,
                    time,
                    replica: replica as u32,
                })
            })
            .collect();
        replica_clicks.sort_by(|a, b| {
            a.time
                .partial_cmp(&b.time)
                .expect("click times are finite")
                .then(a.detector.cmp(&b.detector))
        });
        clicks.extend(replica_clicks);
        per_replica_counts.push(counts);
    }

    let totals: Vec<u64> = (0..n_det)
        .map(|d| per_replica_counts.iter().map(|c| c[d]).sum())
        .collect();
    let total_clicks: u64 = totals.iter().sum();

    let gamma = process.gamma;
    let stats = detectors
        .iter()
        .enumerate()
        .map(|(d, det)| {
            let count = totals[d];
            let frequency = gamma * count as f64 / (duration * replicas as f64);
            let probability = if total_clicks > 0 {
                count as f64 / total_clicks as f64
            } else {
                0.0
            };

            let (probability_std_error, frequency_std_error) = if replicas >= 2 {
                let mut p_stats = RunningStats::new();
                let mut f_stats = RunningStats::new();
                for counts in &per_replica_counts {
                    let replica_total: u64 = counts.iter().sum();
                    if replica_total > 0 {
                        p_stats.push(counts[d] as f64 / replica_total as f64);
                    }
                    f_stats.push(gamma * counts[d] as f64 / duration);
                }
                let p_se = if p_stats.count() >= 2 {
                    p_stats.std_error()
                } else {
                    binomial_std_error(probability, total_clicks)
                };
                (p_se, f_stats.std_error())
            } else {
                // single replica: binomial model for P, Poisson scale for lambda
                (
                    binomial_std_error(probability, total_clicks),
                    gamma * (count as f64).sqrt() / duration,
                )
            };

            DetectorStats {
                id: det.id.clone(),
                clicks: count,
                frequency,
                frequency_std_error,
                probability,
                probability_std_error,
                oracle_probability: det.oracle_probability,
            }
        })
        .collect();

    let double_clicks = count_coincidences(&clicks, coincidence_window);

    RunStatistics {
        detectors: stats,
        total_clicks,
        double_clicks,
        duration,
        replicas,
        coincidence_window,
        clicks,
        per_replica_counts,
    }
}

fn binomial_std_error(p: f64, n: u64) -> f64 {
    if n == 0 {
        f64::INFINITY
    } else {
        (p * (1.0 - p) / n as f64).sqrt()
    }
}

/// Run the position-detection experiment described by `cfg`.
pub fn run_detection(cfg: &ExperimentConfig) -> Result<RunStatistics> {
    cfg.validate()?;
    let psi_normalized = cfg.psi.normalize()?;
    let born: Vec<f64> = cfg
        .detectors
        .iter()
        .map(|det| psi_normalized.born_probability(&det.region))
        .collect::<Result<_>>()?;
    let covered: f64 = born.iter().sum();

    let detectors: Vec<WeightedDetector> = cfg
        .detectors
        .iter()
        .zip(&born)
        .map(|(det, &p)| {
            Ok(WeightedDetector {
                id: det.id.clone(),
                weight: cfg.region_energy(&det.region),
                epsilon: det
                    .threshold
                    .as_ref()
                    .unwrap_or(&cfg.threshold)
                    .resolve(&cfg.psi)?,
                oracle_probability: if covered > 0.0 { p / covered } else { 0.0 },
            })
        })
        .collect::<Result<_>>()?;

    Ok(run_weighted(
        detectors,
        &cfg.process,
        cfg.driver_mode,
        cfg.duration,
        cfg.coincidence_window,
        cfg.replicas,
    ))
}

/// Measurement in an arbitrary orthonormal basis: one virtual detector per
/// basis element, fed the coefficient energy `|<phi(s), e_j>|^2` under the
/// shared threshold logic. With the delta basis this reduces to position
/// detection on single cells.
pub fn run_basis_measurement(cfg: &ExperimentConfig, basis: &[FieldState]) -> Result<RunStatistics> {
    cfg.validate()?;
    if basis.is_empty() {
        return Err(Error::InvalidConfig("basis must not be empty".into()));
    }
    // Gram matrix must match the identity to 1e-10.
    let mut offending = Vec::new();
    for (j, ej) in basis.iter().enumerate() {
        for (k, ek) in basis.iter().enumerate().skip(j) {
            let gram = ej.inner_product(ek)?;
            let target = if j == k { 1.0 } else { 0.0 };
            let deviation = (gram - target).norm();
            if deviation > 1e-10 {
                offending.push((j, k, deviation));
            }
        }
    }
    if !offending.is_empty() {
        return Err(Error::NonOrthonormalBasis { entries: offending });
    }

    let epsilon = cfg.threshold.resolve(&cfg.psi)?;
    let weights: Vec<f64> = basis
        .iter()
        .map(|e| Ok(cfg.psi.inner_product(e)?.norm_sqr()))
        .collect::<Result<_>>()?;
    let covered: f64 = weights.iter().sum();

    let detectors: Vec<WeightedDetector> = weights
        .iter()
        .enumerate()
        .map(|(j, &w)| WeightedDetector {
            id: format!("e{j}"),
            weight: w,
            epsilon,
            oracle_probability: if covered > 0.0 { w / covered } else { 0.0 },
        })
        .collect();

    Ok(run_weighted(
        detectors,
        &cfg.process,
        cfg.driver_mode,
        cfg.duration,
        cfg.coincidence_window,
        cfg.replicas,
    ))
}

/// Count double clicks: unordered pairs of clicks from distinct detectors of
/// the same replica with `|t_a - t_b| <= w`. Greedy earliest-first matching,
/// each click used at most once, like a hardware coincidence counter.
/// Clicks must be time-sorted within each replica.
pub fn count_coincidences(clicks: &[ClickRecord], window: f64) -> u64 {
    use std::collections::{HashMap, VecDeque};

    let mut by_replica: HashMap<u32, Vec<&ClickRecord>> = HashMap::new();
    for click in clicks {
        by_replica.entry(click.replica).or_default().push(click);
    }

    let mut pairs = 0u64;
    for run in by_replica.values() {
        debug_assert!(
            run.windows(2).all(|w| w[0].time <= w[1].time),
            "clicks must be sorted by time within a replica"
        );
        let mut unmatched: VecDeque<&ClickRecord> = VecDeque::new();
        for &click in run {
            while let Some(front) = unmatched.front() {
                if front.time < click.time - window {
                    unmatched.pop_front();
                } else {
                    break;
                }
            }
            // everything left is within the window; take the earliest from a
            // different detector
            if let Some(pos) = unmatched
                .iter()
                .position(|u| u.detector != click.detector)
            {
                unmatched.remove(pos);
                pairs += 1;
            } else {
                unmatched.push_back(click);
            }
        }
    }
    pairs
}

/// Analytic envelope for the double-click count over total observation time
/// `T`: `n_double <= T / (2 C gamma)`.
pub fn double_click_bound(duration: f64, calibration: f64, gamma: f64) -> f64 {
    duration / (2.0 * calibration * gamma)
}

/// One detector's outcome at one threshold of an epsilon scan.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonScanEntry {
    pub epsilon: f64,
    pub detector_id: String,
    pub probability: f64,
    pub oracle_probability: f64,
    pub lambda: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectorSlope {
    pub detector_id: String,
    /// Slope of `ln lambda` vs `ln epsilon`; -1 when the click frequency is
    /// inversely proportional to the threshold.
    pub slope: f64,
}

/// Outcome of scanning the detection threshold over at least a decade.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonScanReport {
    pub entries: Vec<EpsilonScanEntry>,
    pub epsilons: Vec<f64>,
    /// Largest `|P(eps_a) - P(eps_b)|` over detectors and threshold pairs.
    pub max_pairwise_deviation: f64,
    /// Every pairwise deviation within its joint 3-sigma band.
    pub within_joint_band: bool,
    /// Every probability within 3 sigma of the Born oracle.
    pub within_oracle_band: bool,
    pub lambda_slopes: Vec<DetectorSlope>,
    /// Largest relative spread of `lambda * epsilon` per detector across the
    /// scan (the product is invariant when `lambda ~ 1/epsilon`).
    pub lambda_epsilon_product_spread: f64,
}

/// Re-run the experiment at each threshold (same seed base) and report how
/// the detection probabilities and click frequencies respond.
pub fn epsilon_invariance_scan(
    cfg: &ExperimentConfig,
    epsilons: &[f64],
) -> Result<EpsilonScanReport> {
    if epsilons.len() < 2 {
        return Err(Error::InvalidEpsilonScan(format!(
            "{} value(s)",
            epsilons.len()
        )));
    }
    if epsilons.iter().any(|&e| e <= 0.0 || !e.is_finite()) {
        return Err(Error::InvalidEpsilonScan(
            "thresholds must be positive and finite".into(),
        ));
    }
    let min = epsilons.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = epsilons.iter().cloned().fold(0.0, f64::max);
    if max / min < 10.0 * (1.0 - 1e-9) {
        return Err(Error::InvalidEpsilonScan(format!(
            "values span a factor of {:.3}, need at least a decade",
            max / min
        )));
    }

    let mut runs = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let mut scan_cfg = cfg.clone();
        scan_cfg.threshold = Threshold::Epsilon(eps);
        for det in &mut scan_cfg.detectors {
            det.threshold = None;
        }
        runs.push(run_detection(&scan_cfg)?);
    }

    let mut entries = Vec::new();
    for (&eps, stats) in epsilons.iter().zip(&runs) {
        for det in &stats.detectors {
            entries.push(EpsilonScanEntry {
                epsilon: eps,
                detector_id: det.id.clone(),
                probability: det.probability,
                oracle_probability: det.oracle_probability,
                lambda: det.frequency,
                std_error: det.probability_std_error,
            });
        }
    }

    let n_det = cfg.detectors.len();
    let mut max_pairwise = 0.0f64;
    let mut within_joint = true;
    let mut within_oracle = true;
    let mut slopes = Vec::with_capacity(n_det);
    let mut product_spread = 0.0f64;
    for d in 0..n_det {
        for (a, run_a) in runs.iter().enumerate() {
            let da = &run_a.detectors[d];
            if (da.probability - da.oracle_probability).abs()
                > 3.0 * da.probability_std_error
            {
                within_oracle = false;
            }
            for run_b in runs.iter().skip(a + 1) {
                let db = &run_b.detectors[d];
                let deviation = (da.probability - db.probability).abs();
                max_pairwise = max_pairwise.max(deviation);
                let joint = (da.probability_std_error.powi(2)
                    + db.probability_std_error.powi(2))
                .sqrt();
                if deviation > 3.0 * joint {
                    within_joint = false;
                }
            }
        }

        let lambdas: Vec<f64> = runs.iter().map(|r| r.detectors[d].frequency).collect();
        let slope = if lambdas.iter().all(|&l| l > 0.0) {
            let ln_eps: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
            let ln_lambda: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
            linear_fit(&ln_eps, &ln_lambda).0
        } else {
            f64::NAN
        };
        slopes.push(DetectorSlope {
            detector_id: cfg.detectors[d].id.clone(),
            slope,
        });

        let products: Vec<f64> = lambdas
            .iter()
            .zip(epsilons)
            .map(|(l, e)| l * e)
            .collect();
        let mean = products.iter().sum::<f64>() / products.len() as f64;
        if mean > 0.0 {
            let lo = products.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = products.iter().cloned().fold(0.0, f64::max);
            product_spread = product_spread.max((hi - lo) / mean);
        }
    }

    Ok(EpsilonScanReport {
        entries,
        epsilons: epsilons.to_vec(),
        max_pairwise_deviation: max_pairwise,
        within_joint_band: within_joint,
        within_oracle_band: within_oracle,
        lambda_slopes: slopes,
        lambda_epsilon_product_spread: product_spread,
    })
}

/// One (C, w) cell of a coincidence scan.
#[derive(Debug, Clone, Serialize)]
pub struct CoincidenceScanEntry {
    pub calibration: f64,
    pub window: f64,
    pub n_double: u64,
    /// `T_total / (2 C gamma)` with `T_total = duration * replicas`.
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoincidenceScanReport {
    pub entries: Vec<CoincidenceScanEntry>,
    /// Window at which suppression is judged (the configured coincidence
    /// window).
    pub primary_window: f64,
    /// Whether `n_double` is non-increasing in C at the primary window.
    pub monotone_in_calibration: bool,
    /// Largest `n_double / bound` over all entries.
    pub max_bound_ratio: f64,
}

/// Sweep the calibration constant and count double clicks at several windows.
/// Each calibration runs once (same seed base); windows are applied to the
/// same click log.
pub fn coincidence_scan(
    cfg: &ExperimentConfig,
    calibrations: &[f64],
    windows: &[f64],
) -> Result<CoincidenceScanReport> {
    if calibrations.is_empty() {
        return Err(Error::InvalidConfig(
            "coincidence scan needs at least one calibration constant".into(),
        ));
    }
    if calibrations.iter().any(|&c| c <= 0.0 || !c.is_finite()) {
        return Err(Error::InvalidConfig(
            "calibration constants must be positive and finite".into(),
        ));
    }
    let primary = cfg.coincidence_window;
    let mut all_windows = vec![primary];
    for &w in windows {
        if !all_windows.contains(&w) {
            all_windows.push(w);
        }
    }
    if all_windows
        .iter()
        .any(|&w| w < cfg.process.dt * (1.0 - 1e-9))
    {
        return Err(Error::InvalidConfig(
            "coincidence windows must be at least one step".into(),
        ));
    }

    let total_time = cfg.duration * cfg.replicas as f64;
    let mut entries = Vec::new();
    let mut primary_counts = Vec::with_capacity(calibrations.len());
    let mut max_ratio = 0.0f64;
    for &c in calibrations {
        let mut scan_cfg = cfg.clone();
        scan_cfg.threshold = Threshold::Calibration(c);
        for det in &mut scan_cfg.detectors {
            det.threshold = None;
        }
        let stats = run_detection(&scan_cfg)?;
        let bound = double_click_bound(total_time, c, cfg.process.gamma);
        for &w in &all_windows {
            let n_double = count_coincidences(&stats.clicks, w);
            if bound > 0.0 {
                max_ratio = max_ratio.max(n_double as f64 / bound);
            }
            if w == primary {
                primary_counts.push(n_double);
            }
            entries.push(CoincidenceScanEntry {
                calibration: c,
                window: w,
                n_double,
                bound,
            });
        }
    }

    // judge monotonicity over calibrations sorted ascending
    let mut order: Vec<usize> = (0..calibrations.len()).collect();
    order.sort_by(|&a, &b| calibrations[a].total_cmp(&calibrations[b]));
    let monotone = order
        .windows(2)
        .all(|pair| primary_counts[pair[0]] >= primary_counts[pair[1]]);

    Ok(CoincidenceScanReport {
        entries,
        primary_window: primary,
        monotone_in_calibration: monotone,
        max_bound_ratio: max_ratio,
    })
}
