//! Quadratic signal observables and the two averaging routes.
//!
//! Observables of classical signals are quadratic functionals
//! `f_A(phi) = <A phi, phi>`; position detection only needs the energy
//! density `|phi(x0)|^2`. The same functional can be averaged two ways:
//! along one long trajectory (time average) or over independent realizations
//! (ensemble average). Ergodicity says the two agree, and
//! [`ergodicity_report`] measures how well they do.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{FieldState, Grid};
use crate::numerics::{CompensatedSum, RunningStats};
use crate::signal::{sample_ensemble, DriverMode, ProcessParams, SignalDriver};

/// Minimum ratio of averaging window to driver correlation time for the time
/// average to be meaningful.
pub const MIN_WINDOW_TAUS: f64 = 100.0;

/// Hermitian matrix over grid cells defining `f_A(phi) = <A phi, phi>`.
///
/// The discrete form is `sum_ij A[i][j] phi_j conj(phi_i) dV^2`, so a kernel
/// with `1/dV` on the diagonal reproduces the total energy, and the projector
/// onto a unit-norm field `e` evaluates to `|<phi, e>|^2`.
#[derive(Debug, Clone)]
pub struct QuadraticObservable {
    grid: Arc<Grid>,
    matrix: Vec<Complex64>, // row-major N x N
}

impl QuadraticObservable {
    /// Validates the Hermitian invariant to 1e-12 elementwise.
    pub fn new(grid: Arc<Grid>, matrix: Vec<Complex64>) -> Result<Self> {
        let n = grid.len();
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: matrix.len(),
            });
        }
        let mut max_deviation = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let dev = (matrix[i * n + j] - matrix[j * n + i].conj()).norm();
                max_deviation = max_deviation.max(dev);
            }
        }
        if max_deviation > 1e-12 {
            return Err(Error::NotHermitian { max_deviation });
        }
        Ok(Self { grid, matrix })
    }

    /// The total-energy functional: `f(phi) = ||phi||^2`.
    pub fn energy(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        let mut matrix = vec![Complex64::ZERO; n * n];
        let inv_dv = 1.0 / grid.cell_volume();
        for i in 0..n {
            matrix[i * n + i] = Complex64::new(inv_dv, 0.0);
        }
        Self { grid, matrix }
    }

    /// Projector onto the discrete delta at `cell`:
    /// `f(phi) = |phi(x_cell)|^2 dV`.
    pub fn position_projector(grid: Arc<Grid>, cell: usize) -> Result<Self> {
        grid.check_cell(cell)?;
        let n = grid.len();
        let mut matrix = vec![Complex64::ZERO; n * n];
        matrix[cell * n + cell] = Complex64::new(1.0 / grid.cell_volume(), 0.0);
        Ok(Self { grid, matrix })
    }

    /// Rank-1 projector onto a unit-norm field: `f(phi) = |<phi, e>|^2`.
    pub fn projector(e: &FieldState) -> Result<Self> {
        let norm_sq = e.norm_squared();
        if (norm_sq - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "projector target must be unit norm, got ||e||^2 = {norm_sq}"
            )));
        }
        let grid = Arc::clone(e.grid());
        let n = grid.len();
        let mut matrix = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                matrix[i * n + j] = e.amplitude(i) * e.amplitude(j).conj();
            }
        }
        Ok(Self { grid, matrix })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Elementwise sum; functionals add: `f_{A+B} = f_A + f_B`.
    pub fn add(&self, other: &QuadraticObservable) -> Result<Self> {
        if self.grid.len() != other.grid.len() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.len(),
                got: other.grid.len(),
            });
        }
        let matrix = self
            .matrix
            .iter()
            .zip(&other.matrix)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(Arc::clone(&self.grid), matrix)
    }

    /// Evaluate `<A phi, phi>`. The value of a Hermitian form is real; the
    /// rounding-level imaginary residue is checked and discarded.
    pub fn evaluate(&self, phi: &FieldState) -> Result<f64> {
        let n = self.grid.len();
        if phi.amplitudes().len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: phi.amplitudes().len(),
            });
        }
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for i in 0..n {
            let row = &self.matrix[i * n..(i + 1) * n];
            let mut acc = Complex64::ZERO;
            for (a, &p) in row.iter().zip(phi.amplitudes()) {
                acc += a * p;
            }
            let term = acc * phi.amplitude(i).conj();
            re.add(term.re);
            im.add(term.im);
        }
        let dv2 = self.grid.cell_volume() * self.grid.cell_volume();
        let value = re.value() * dv2;
        let residue = im.value() * dv2;
        debug_assert!(
            residue.abs() <= 1e-10 * (1.0 + value.abs()),
            "imaginary residue {residue} too large for a Hermitian form"
        );
        Ok(value)
    }
}

/// Energy density at one cell: `|phi(x_cell)|^2`.
pub fn position_density(phi: &FieldState, cell: usize) -> f64 {
    phi.amplitude(cell).norm_sqr()
}

fn check_window(driver: &SignalDriver, delta: f64) -> Result<()> {
    if delta <= 0.0 || !delta.is_finite() {
        return Err(Error::WindowTooShort {
            window: delta,
            required: driver.dt(),
        });
    }
    // A frozen driver has no fluctuations to average out, so any window works;
    // same for the tau -> infinity limit.
    let tau = driver.tau_pq();
    if driver.mode() == DriverMode::Stochastic && tau.is_finite() {
        let required = MIN_WINDOW_TAUS * tau;
        if delta < required * (1.0 - 1e-9) {
            return Err(Error::WindowTooShort {
                window: delta,
                required,
            });
        }
    }
    Ok(())
}

/// Internal rectangle-rule average with a streaming batch-means error bar.
fn time_average_impl<F>(
    f: &mut F,
    driver: &mut SignalDriver,
    psi: &FieldState,
    delta: f64,
) -> (f64, f64)
where
    F: FnMut(&FieldState) -> f64,
{
    let dt = driver.dt();
    let steps = ((delta / dt).round() as u64).max(1);
    let batches = 64u64.min(steps.max(2) / 2).max(2);
    let batch_len = steps.div_ceil(batches);

    let mut scratch = psi.clone();
    let mut total = CompensatedSum::new();
    let mut batch_acc = CompensatedSum::new();
    let mut batch_count = 0u64;
    let mut batch_stats = RunningStats::new();
    for step in 0..steps {
        driver.field_into(psi, &mut scratch);
        let value = f(&scratch);
        total.add(value);
        batch_acc.add(value);
        batch_count += 1;
        if batch_count == batch_len || step + 1 == steps {
            batch_stats.push(batch_acc.value() / batch_count as f64);
            batch_acc = CompensatedSum::new();
            batch_count = 0;
        }
        driver.step();
    }
    (total.value() / steps as f64, batch_stats.std_error())
}

/// Time average `(1/Delta) * sum f(phi(s_k)) dt` over `[0, Delta]` by the
/// rectangle rule at the driver's step. The driver advances in place, and the
/// result is deterministic given its seed.
///
/// Errors with "ergodic window too short" when `Delta < 100 tau_pq` for a
/// fluctuating driver.
pub fn time_average<F>(
    mut f: F,
    driver: &mut SignalDriver,
    psi: &FieldState,
    delta: f64,
) -> Result<f64>
where
    F: FnMut(&FieldState) -> f64,
{
    check_window(driver, delta)?;
    Ok(time_average_impl(&mut f, driver, psi, delta).0)
}

/// Fast path for quadratic functionals: `f_A(eta psi) = |eta|^2 f_A(psi)`,
/// so only `|eta|^2` needs averaging along the trajectory.
pub fn time_average_quadratic(
    observable: &QuadraticObservable,
    driver: &mut SignalDriver,
    psi: &FieldState,
    delta: f64,
) -> Result<f64> {
    check_window(driver, delta)?;
    let base = observable.evaluate(psi)?;
    let dt = driver.dt();
    let steps = ((delta / dt).round() as u64).max(1);
    let mut total = CompensatedSum::new();
    for _ in 0..steps {
        total.add(driver.eta().norm_sqr());
        driver.step();
    }
    Ok(base * total.value() / steps as f64)
}

/// Mean of a functional over explicit samples, with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SampleAverage {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

pub fn ensemble_average<F>(mut f: F, samples: &[FieldState]) -> Result<SampleAverage>
where
    F: FnMut(&FieldState) -> f64,
{
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut stats = RunningStats::new();
    for phi in samples {
        stats.push(f(phi));
    }
    Ok(SampleAverage {
        mean: stats.mean(),
        std_error: if samples.len() > 1 {
            stats.std_error()
        } else {
            0.0
        },
        count: samples.len(),
    })
}

/// Side-by-side comparison of the time and ensemble routes for one
/// functional.
#[derive(Debug, Clone, Serialize)]
pub struct ErgodicityReport {
    pub time_average: f64,
    pub time_std_error: f64,
    pub ensemble_average: f64,
    pub ensemble_std_error: f64,
    pub difference: f64,
    pub combined_std_error: f64,
    /// Averaging window Delta (seconds).
    pub window: f64,
    /// Number of ensemble draws.
    pub samples: usize,
    /// Whether the window reaches the ergodic regime (`Delta >= 100 tau_pq`).
    pub window_in_regime: bool,
    /// True when the window is in regime and the two averages agree within
    /// three combined standard errors.
    pub converged: bool,
}

/// Run both averaging routes for `f` and flag disagreement beyond the
/// combined 3-sigma band. Unlike [`time_average`], a too-short window is not
/// an error here: it is reported as non-converged.
pub fn ergodicity_report<F>(
    mut f: F,
    psi: &FieldState,
    params: &ProcessParams,
    delta: f64,
    n: usize,
) -> Result<ErgodicityReport>
where
    F: FnMut(&FieldState) -> f64,
{
    params.validate()?;
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    if delta <= 0.0 || !delta.is_finite() {
        return Err(Error::WindowTooShort {
            window: delta,
            required: params.dt,
        });
    }
    let mut driver = SignalDriver::new(params)?;
    let (t_mean, t_se) = time_average_impl(&mut f, &mut driver, psi, delta);

    // Decouple the ensemble stream from the trajectory stream.
    let ensemble_seed = params.seed ^ 0x9E37_79B9_7F4A_7C15;
    let samples = sample_ensemble(psi, n, ensemble_seed);
    let e_avg = ensemble_average(&mut f, &samples)?;

    let difference = t_mean - e_avg.mean;
    let combined = (t_se * t_se + e_avg.std_error * e_avg.std_error).sqrt();
    let window_in_regime = delta >= MIN_WINDOW_TAUS * params.tau_pq * (1.0 - 1e-9);
    let agree = combined.is_finite() && difference.abs() <= 3.0 * combined;
    // A constant functional trivially agrees even though both error bars are 0.
    let exact = difference == 0.0;
    Ok(ErgodicityReport {
        time_average: t_mean,
        time_std_error: t_se,
        ensemble_average: e_avg.mean,
        ensemble_std_error: e_avg.std_error,
        difference,
        combined_std_error: combined,
        window: delta,
        samples: n,
        window_in_regime,
        converged: window_in_regime && (agree || exact),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    fn grid4() -> Arc<Grid> {
        Grid::line(0.0, 0.5, 4).unwrap()
    }

    fn random_field(grid: &Arc<Grid>, salt: u64) -> FieldState {
        let values: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                let t = (i as u64 + 1) * (salt + 1);
                Complex64::new(
                    ((t as f64) * 0.7311).sin(),
                    ((t as f64) * 1.9173).cos() * 0.5,
                )
            })
            .collect();
        FieldState::new(Arc::clone(grid), values).unwrap()
    }

    #[test]
    fn energy_observable_returns_norm_squared() {
        let grid = grid4();
        let obs = QuadraticObservable::energy(Arc::clone(&grid));
        let phi = random_field(&grid, 1);
        let f = obs.evaluate(&phi).unwrap();
        assert!((f - phi.norm_squared()).abs() < 1e-12);

        let zero = FieldState::zero(grid);
        assert_eq!(obs.evaluate(&zero).unwrap(), 0.0);
    }

    #[test]
    fn position_projector_returns_density_times_dv() {
        let grid = grid4();
        let obs = QuadraticObservable::position_projector(Arc::clone(&grid), 2).unwrap();
        let phi = random_field(&grid, 2);
        let expected = position_density(&phi, 2) * grid.cell_volume();
        assert!((obs.evaluate(&phi).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn projector_gives_coefficient_energy() {
        let grid = grid4();
        let e = grid.delta_basis_element(1).unwrap();
        let obs = QuadraticObservable::projector(&e).unwrap();
        let phi = random_field(&grid, 3);
        let coeff = phi.inner_product(&e).unwrap();
        assert!((obs.evaluate(&phi).unwrap() - coeff.norm_sqr()).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_hermitian_and_mismatched() {
        let grid = Grid::line(0.0, 1.0, 2).unwrap();
        let bad = vec![
            Complex64::ONE,
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 1.0), // should be -i
            Complex64::ONE,
        ];
        assert!(matches!(
            QuadraticObservable::new(Arc::clone(&grid), bad),
            Err(Error::NotHermitian { .. })
        ));

        let obs = QuadraticObservable::energy(Arc::clone(&grid));
        let other = FieldState::zero(Grid::line(0.0, 1.0, 3).unwrap());
        assert!(matches!(
            obs.evaluate(&other),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn functionals_are_additive() {
        let grid = grid4();
        let a = QuadraticObservable::energy(Arc::clone(&grid));
        let b = QuadraticObservable::position_projector(Arc::clone(&grid), 0).unwrap();
        let sum = a.add(&b).unwrap();
        for salt in 0..20 {
            let phi = random_field(&grid, salt);
            let lhs = sum.evaluate(&phi).unwrap();
            let rhs = a.evaluate(&phi).unwrap() + b.evaluate(&phi).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn position_density_examples() {
        let grid = Grid::line(0.0, 1.0, 1).unwrap();
        let psi = FieldState::new(Arc::clone(&grid), vec![Complex64::new(0.0, 3.0)]).unwrap();
        assert_eq!(position_density(&psi, 0), 9.0);

        let scaled = psi.scaled(Complex64::new(0.5, -1.5));
        let c2 = Complex64::new(0.5, -1.5).norm_sqr();
        assert!((position_density(&scaled, 0) - 9.0 * c2).abs() < 1e-12);
    }

    #[test]
    fn frozen_driver_time_average_is_exact() {
        let grid = grid4();
        let psi = random_field(&grid, 5);
        let params = ProcessParams {
            seed: 4,
            ..ProcessParams::default()
        };
        let mut driver = SignalDriver::frozen_unit(&params).unwrap();
        let avg = time_average(|phi| position_density(phi, 1), &mut driver, &psi, 0.01).unwrap();
        assert_eq!(avg, position_density(&psi, 1));
    }

    #[test]
    fn constant_functional_averages_to_itself() {
        let grid = grid4();
        let psi = random_field(&grid, 6);
        let params = ProcessParams {
            seed: 4,
            ..ProcessParams::default()
        };
        let mut driver = SignalDriver::new(&params).unwrap();
        let avg = time_average(|_| 1.0, &mut driver, &psi, 0.05).unwrap();
        assert_eq!(avg, 1.0);
    }

    #[test]
    fn window_shorter_than_hundred_taus_errors() {
        let grid = grid4();
        let psi = random_field(&grid, 7);
        let params = ProcessParams {
            seed: 4,
            ..ProcessParams::default()
        };
        let mut driver = SignalDriver::new(&params).unwrap();
        let err = time_average(|_| 1.0, &mut driver, &psi, 50.0 * params.tau_pq).unwrap_err();
        assert!(matches!(err, Error::WindowTooShort { .. }));
    }

    #[test]
    fn total_energy_time_average_tracks_norm() {
        // Delta = 1e4 tau: time-averaged ||phi||^2 within 3% of ||psi||^2
        let grid = grid4();
        let psi = random_field(&grid, 8);
        let params = ProcessParams {
            seed: 21,
            ..ProcessParams::default()
        };
        let delta = 1e4 * params.tau_pq;
        let mut driver = SignalDriver::new(&params).unwrap();
        let avg = time_average(|phi| phi.norm_squared(), &mut driver, &psi, delta).unwrap();
        let expected = psi.norm_squared();
        assert!(
            (avg / expected - 1.0).abs() < 0.03,
            "time average {avg} vs {expected}"
        );
    }

    #[test]
    fn quadratic_fast_path_matches_general_path() {
        let grid = grid4();
        let psi = random_field(&grid, 9);
        let obs = QuadraticObservable::position_projector(Arc::clone(&grid), 3).unwrap();
        let params = ProcessParams {
            seed: 33,
            ..ProcessParams::default()
        };
        let delta = 200.0 * params.tau_pq;

        let mut d1 = SignalDriver::new(&params).unwrap();
        let general = time_average(|phi| obs.evaluate(phi).unwrap(), &mut d1, &psi, delta).unwrap();
        let mut d2 = SignalDriver::new(&params).unwrap();
        let fast = time_average_quadratic(&obs, &mut d2, &psi, delta).unwrap();
        assert!((general - fast).abs() <= 1e-10 * (1.0 + general.abs()));
    }

    #[test]
    fn ensemble_average_basics() {
        let grid = grid4();
        let psi = random_field(&grid, 10);
        let single =
            ensemble_average(|phi| phi.norm_squared(), std::slice::from_ref(&psi)).unwrap();
        assert_eq!(single.mean, psi.norm_squared());
        assert_eq!(single.count, 1);

        assert!(matches!(
            ensemble_average(|_| 0.0, &[]),
            Err(Error::EmptySamples)
        ));
    }

    #[test]
    fn ensemble_energy_matches_analytic_value() {
        let grid = grid4();
        let psi = random_field(&grid, 11);
        let samples = sample_ensemble(&psi, 100_000, 5150);
        let avg = ensemble_average(|phi| phi.norm_squared(), &samples).unwrap();
        let expected = psi.norm_squared();
        assert!(
            (avg.mean - expected).abs() < 3.0 * avg.std_error,
            "mean {} vs {} (se {})",
            avg.mean,
            expected,
            avg.std_error
        );
    }

    #[test]
    fn mean_energy_equals_trace_of_sample_covariance() {
        // <pi> = Tr D for the empirical covariance: an algebraic identity of
        // the same sample set, checked to rounding; and the trace lands near
        // ||psi||^2.
        let grid = grid4();
        let psi = random_field(&grid, 12);
        let samples = sample_ensemble(&psi, 20_000, 61);
        let avg = ensemble_average(|phi| phi.norm_squared(), &samples).unwrap();

        let n = samples.len() as f64;
        let dv = grid.cell_volume();
        let mut trace = CompensatedSum::new();
        for cell in 0..grid.len() {
            let mut acc = CompensatedSum::new();
            for phi in &samples {
                acc.add(phi.amplitude(cell).norm_sqr());
            }
            trace.add(acc.value() / n * dv);
        }
        let trace = trace.value();
        assert!(
            (trace - avg.mean).abs() <= 1e-10 * (1.0 + avg.mean.abs()),
            "trace {trace} vs mean energy {}",
            avg.mean
        );
        assert!((trace - psi.norm_squared()).abs() < 4.0 * avg.std_error);
    }

    #[test]
    fn ergodicity_report_converges_at_defaults() {
        let grid = grid4();
        let psi = random_field(&grid, 13);
        let params = ProcessParams {
            seed: 99,
            ..ProcessParams::default()
        };
        let report = ergodicity_report(
            |phi| position_density(phi, 0),
            &psi,
            &params,
            1e4 * params.tau_pq,
            10_000,
        )
        .unwrap();
        assert!(report.window_in_regime);
        assert!(
            report.converged,
            "difference {} vs combined error {}",
            report.difference, report.combined_std_error
        );
    }

    #[test]
    fn ergodicity_report_constant_functional() {
        let grid = grid4();
        let psi = random_field(&grid, 14);
        let params = ProcessParams {
            seed: 1,
            ..ProcessParams::default()
        };
        let report =
            ergodicity_report(|_| 2.5, &psi, &params, 1e4 * params.tau_pq, 100).unwrap();
        assert_eq!(report.difference, 0.0);
        assert!(report.converged);
    }

    #[test]
    fn ergodicity_report_flags_short_window() {
        let grid = grid4();
        let psi = random_field(&grid, 15);
        let params = ProcessParams {
            seed: 2,
            ..ProcessParams::default()
        };
        // window of one correlation time: relaxed precondition, flagged
        let report = ergodicity_report(
            |phi| position_density(phi, 0),
            &psi,
            &params,
            params.tau_pq,
            1_000,
        )
        .unwrap();
        assert!(!report.window_in_regime);
        assert!(!report.converged);
    }

    #[test]
    fn time_average_error_shrinks_with_window() {
        // RMS error over replicas at Delta and 100*Delta; expect roughly a
        // 10x reduction, accept anything clearly decreasing.
        let grid = grid4();
        let psi = random_field(&grid, 16);
        let expected = position_density(&psi, 0);
        let rms = |delta: f64| {
            let mut sq = 0.0;
            let reps = 16;
            for rep in 0..reps {
                let params = ProcessParams {
                    seed: 1000 + rep,
                    ..ProcessParams::default()
                };
                let mut driver = SignalDriver::new(&params).unwrap();
                let avg =
                    time_average(|phi| position_density(phi, 0), &mut driver, &psi, delta)
                        .unwrap();
                sq += (avg - expected) * (avg - expected);
            }
            (sq / reps as f64).sqrt()
        };
        let tau = ProcessParams::default().tau_pq;
        let coarse = rms(100.0 * tau);
        let fine = rms(10_000.0 * tau);
        assert!(
            fine < coarse / 3.0,
            "rms at 1e4 tau = {fine}, at 1e2 tau = {coarse}"
        );
    }
}
