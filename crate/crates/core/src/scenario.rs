//! Scenario files and built-in presets.
//!
//! A scenario is a JSON document describing one experiment: grid, signal
//! shape, detectors, process parameters, run length, and optional scan
//! lists. Parsing validates everything up front and fills the documented
//! defaults (`tau_pq = 1e-4 s`, `dt = tau_pq / 10`, `gamma = 1 s`,
//! `coincidence window = 10 dt`), echoing the fully resolved scenario so a
//! run's outputs carry their own provenance.
//!
//! ```json
//! {
//!   "grid": { "cells": [32], "extent": [[0.0, 3.2]] },
//!   "psi": { "preset": "two_peak" },
//!   "detectors": [
//!     { "id": "A", "range": [0, 16] },
//!     { "id": "B", "range": [16, 32] }
//!   ],
//!   "threshold": { "calibration": 0.005 },
//!   "run": { "duration": 100.0, "seed": 42 }
//! }
//! ```
//!
//! Field states can also be loaded from a plain text file: a `dv <value>`
//! line followed by one `<coordinates...> <re> <im>` record per cell, with
//! `#` comments. The coordinate column count fixes the grid dimension.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detector::{DetectorConfig, Threshold};
use crate::error::{Error, Result};
use crate::experiment::{ExperimentConfig, DEFAULT_WINDOW_STEPS};
use crate::field::{FieldState, Grid, Point};
use crate::signal::{DriverMode, ProcessParams, DEFAULT_GAMMA, DEFAULT_TAU_PQ};

pub const PRESET_NAMES: [&str; 3] = ["two_peak", "gaussian_packet", "uniform"];

/// Regular grid: cells per axis (the length sets the dimension) and axis
/// extents.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub cells: Vec<usize>,
    /// `[min, max]` per axis; defaults to `[0, 1]` on every axis.
    #[serde(default)]
    pub extent: Option<Vec<[f64; 2]>>,
    /// Cell volume; defaults to the product of the axis spacings.
    #[serde(default)]
    pub dv: Option<f64>,
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<Grid>> {
        let dim = self.cells.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::Scenario(format!(
                "grid.cells must list 1 to 3 axes, got {dim}"
            )));
        }
        if self.cells.contains(&0) {
            return Err(Error::Scenario("grid.cells entries must be positive".into()));
        }
        let extents = match &self.extent {
            Some(e) => {
                if e.len() != dim {
                    return Err(Error::Scenario(format!(
                        "grid.extent lists {} axes but grid.cells lists {dim}",
                        e.len()
                    )));
                }
                e.clone()
            }
            None => vec![[0.0, 1.0]; dim],
        };
        let mut spacings = Vec::with_capacity(dim);
        for (axis, ([lo, hi], &n)) in extents.iter().zip(&self.cells).enumerate() {
            if hi <= lo {
                return Err(Error::Scenario(format!(
                    "grid.extent axis {axis}: max must exceed min"
                )));
            }
            spacings.push((hi - lo) / n as f64);
        }
        let dv = self.dv.unwrap_or_else(|| spacings.iter().product());

        let mut points: Vec<Point> = Vec::with_capacity(self.cells.iter().product());
        let center =
            |axis: usize, i: usize| extents[axis][0] + (i as f64 + 0.5) * spacings[axis];
        match dim {
            1 => {
                for i in 0..self.cells[0] {
                    points.push([center(0, i), 0.0, 0.0]);
                }
            }
            2 => {
                for i in 0..self.cells[0] {
                    for j in 0..self.cells[1] {
                        points.push([center(0, i), center(1, j), 0.0]);
                    }
                }
            }
            _ => {
                for i in 0..self.cells[0] {
                    for j in 0..self.cells[1] {
                        for k in 0..self.cells[2] {
                            points.push([center(0, i), center(1, j), center(2, k)]);
                        }
                    }
                }
            }
        }
        Grid::new(dim, points, dv)
    }
}

/// Where the signal shape comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiSpec {
    /// Named shape on the scenario grid: `two_peak`, `gaussian_packet` or
    /// `uniform`.
    Preset(String),
    /// Inline `[re, im]` pairs, one per cell.
    Amplitudes(Vec<[f64; 2]>),
    /// Text file carrying its own grid (see [`load_field_file`]).
    File(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub id: String,
    /// Explicit cell indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
    /// Half-open index range `[start, end)`, a common shorthand.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<Threshold>,
}

impl DetectorSpec {
    fn region(&self) -> Result<Vec<usize>> {
        match (&self.cells, &self.range) {
            (Some(cells), None) => Ok(cells.clone()),
            (None, Some([start, end])) => {
                if start >= end {
                    return Err(Error::Scenario(format!(
                        "detector {:?}: range [{start}, {end}) is empty",
                        self.id
                    )));
                }
                Ok((*start..*end).collect())
            }
            (Some(_), Some(_)) => Err(Error::Scenario(format!(
                "detector {:?}: give either cells or range, not both",
                self.id
            ))),
            (None, None) => Err(Error::Scenario(format!(
                "detector {:?}: missing cells or range",
                self.id
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    #[serde(default)]
    pub tau_pq: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Run duration T (seconds).
    pub duration: f64,
    #[serde(default)]
    pub replicas: Option<u32>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Coincidence window w (seconds); defaults to 10 steps.
    #[serde(default)]
    pub coincidence_window: Option<f64>,
    #[serde(default)]
    pub driver: Option<DriverMode>,
}

/// Scan lists; empty lists are filled with defaults derived from the
/// resolved threshold and step.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub calibrations: Vec<f64>,
    #[serde(default)]
    pub windows: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisSpec {
    /// One delta element per grid cell (reduces to position detection).
    Delta,
    /// `{(1,1), (1,-1)}/sqrt(2 dV)` on a two-cell grid.
    Hadamard,
    /// Explicit basis vectors as `[re, im]` pairs per cell.
    Inline(Vec<Vec<[f64; 2]>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    PositionDensity,
    TotalEnergy,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicitySpec {
    /// Averaging window Delta (seconds); defaults to `1e4 tau_pq`.
    #[serde(default)]
    pub window: Option<f64>,
    /// Ensemble draws; defaults to 10_000.
    #[serde(default)]
    pub samples: Option<usize>,
    /// Cell for the position density; defaults to the cell where `|psi|`
    /// peaks.
    #[serde(default)]
    pub cell: Option<usize>,
    #[serde(default)]
    pub functional: Option<ObservableKind>,
}

/// One experiment, as read from a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    pub psi: PsiSpec,
    pub detectors: Vec<DetectorSpec>,
    pub threshold: Threshold,
    #[serde(default)]
    pub process: ProcessSpec,
    pub run: RunSpec,
    #[serde(default)]
    pub scans: ScanSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisSpec>,
    #[serde(default)]
    pub ergodicity: ErgodicitySpec,
}

/// A scenario with every default filled, ready to run.
#[derive(Debug, Clone)]
pub struct ResolvedScenario {
    /// The input scenario with defaults made explicit; serialized into run
    /// outputs for provenance.
    pub echo: Scenario,
    pub config: ExperimentConfig,
    pub epsilons: Vec<f64>,
    pub calibrations: Vec<f64>,
    pub windows: Vec<f64>,
    pub basis: Vec<FieldState>,
    pub ergodicity_window: f64,
    pub ergodicity_samples: usize,
    pub observable_cell: usize,
    pub observable: ObservableKind,
}

impl Scenario {
    /// Parse a scenario file, reporting serde's line/column diagnostics.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
            .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))
    }

    /// Built-in preset scenarios.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            // Two disjoint bumps with a 1:4 energy split: the two-detector
            // Born test with oracle probabilities (0.2, 0.8).
            "two_peak" => Ok(Self {
                grid: Some(GridSpec {
                    cells: vec![32],
                    extent: Some(vec![[0.0, 3.2]]),
                    dv: None,
                }),
                psi: PsiSpec::Preset("two_peak".into()),
                detectors: vec![
                    DetectorSpec {
                        id: "A".into(),
                        cells: None,
                        range: Some([0, 16]),
                        threshold: None,
                    },
                    DetectorSpec {
                        id: "B".into(),
                        cells: None,
                        range: Some([16, 32]),
                        threshold: None,
                    },
                ],
                threshold: Threshold::Calibration(0.005),
                process: ProcessSpec::default(),
                run: RunSpec {
                    duration: 100.0,
                    replicas: None,
                    seed: Some(42),
                    coincidence_window: None,
                    driver: None,
                },
                scans: ScanSpec::default(),
                basis: None,
                ergodicity: ErgodicitySpec::default(),
            }),
            // A single bump watched by one detector: the lambda-vs-epsilon
            // test bed.
            "gaussian_packet" => Ok(Self {
                grid: Some(GridSpec {
                    cells: vec![32],
                    extent: Some(vec![[0.0, 3.2]]),
                    dv: None,
                }),
                psi: PsiSpec::Preset("gaussian_packet".into()),
                detectors: vec![DetectorSpec {
                    id: "D".into(),
                    cells: None,
                    range: Some([8, 24]),
                    threshold: None,
                }],
                threshold: Threshold::Calibration(0.01),
                process: ProcessSpec::default(),
                run: RunSpec {
                    duration: 100.0,
                    replicas: None,
                    seed: Some(42),
                    coincidence_window: None,
                    driver: None,
                },
                scans: ScanSpec::default(),
                basis: None,
                ergodicity: ErgodicitySpec::default(),
            }),
            // Flat shape over two half-grid detectors: the symmetry and
            // double-click suppression test.
            "uniform" => Ok(Self {
                grid: Some(GridSpec {
                    cells: vec![32],
                    extent: Some(vec![[0.0, 3.2]]),
                    dv: None,
                }),
                psi: PsiSpec::Preset("uniform".into()),
                detectors: vec![
                    DetectorSpec {
                        id: "A".into(),
                        cells: None,
                        range: Some([0, 16]),
                        threshold: None,
                    },
                    DetectorSpec {
                        id: "B".into(),
                        cells: None,
                        range: Some([16, 32]),
                        threshold: None,
                    },
                ],
                threshold: Threshold::Calibration(1.0),
                process: ProcessSpec::default(),
                run: RunSpec {
                    duration: 1000.0,
                    replicas: None,
                    seed: Some(42),
                    coincidence_window: None,
                    driver: None,
                },
                scans: ScanSpec {
                    epsilons: Vec::new(),
                    calibrations: vec![1.0, 5.0, 25.0],
                    windows: Vec::new(),
                },
                basis: None,
                ergodicity: ErgodicitySpec::default(),
            }),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }

    /// Validate, fill defaults, and build the experiment config.
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        let (grid, psi) = match &self.psi {
            PsiSpec::File(path) => {
                let (grid, psi) = load_field_file(path)?;
                if self.grid.is_some() {
                    return Err(Error::Scenario(
                        "psi.file carries its own grid; drop the grid section".into(),
                    ));
                }
                (grid, psi)
            }
            spec => {
                let grid_spec = self.grid.as_ref().ok_or_else(|| {
                    Error::Scenario("grid section required unless psi comes from a file".into())
                })?;
                let grid = grid_spec.build()?;
                let psi = match spec {
                    PsiSpec::Preset(name) => preset_shape(name, &grid)?,
                    PsiSpec::Amplitudes(pairs) => {
                        let amplitudes =
                            pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                        FieldState::new(Arc::clone(&grid), amplitudes)?
                    }
                    PsiSpec::File(_) => unreachable!(),
                };
                (grid, psi)
            }
        };

        let tau_pq = self.process.tau_pq.unwrap_or(DEFAULT_TAU_PQ);
        let dt = self.process.dt.unwrap_or(tau_pq / 10.0);
        let gamma = self.process.gamma.unwrap_or(DEFAULT_GAMMA);
        let seed = self.run.seed.unwrap_or(0);
        let process = ProcessParams {
            tau_pq,
            dt,
            gamma,
            seed,
        };
        let replicas = self.run.replicas.unwrap_or(1);
        let coincidence_window = self
            .run
            .coincidence_window
            .unwrap_or(DEFAULT_WINDOW_STEPS * dt);
        let driver_mode = self.run.driver.unwrap_or_default();

        let detectors = self
            .detectors
            .iter()
            .map(|spec| {
                Ok(DetectorConfig {
                    id: spec.id.clone(),
                    region: spec.region()?,
                    threshold: spec.threshold,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let config = ExperimentConfig {
            psi,
            detectors,
            threshold: self.threshold,
            duration: self.run.duration,
            process,
            coincidence_window,
            replicas,
            driver_mode,
        };
        config.validate().map_err(|e| match e {
            Error::OverlappingRegions { .. } => {
                Error::Scenario(format!("regions must be disjoint ({e})"))
            }
            other => other,
        })?;

        let epsilon0 = self.threshold.resolve(&config.psi)?;
        let epsilons = if self.scans.epsilons.is_empty() {
            vec![epsilon0, epsilon0 * 10f64.sqrt(), epsilon0 * 10.0]
        } else {
            self.scans.epsilons.clone()
        };
        let calibrations = if self.scans.calibrations.is_empty() {
            vec![1.0, 5.0, 25.0]
        } else {
            self.scans.calibrations.clone()
        };
        let windows = if self.scans.windows.is_empty() {
            vec![5.0 * dt, 10.0 * dt, 20.0 * dt]
        } else {
            self.scans.windows.clone()
        };

        let basis = match self.basis.as_ref().unwrap_or(&BasisSpec::Delta) {
            BasisSpec::Delta => config.psi.grid().delta_basis(),
            BasisSpec::Hadamard => hadamard_basis(config.psi.grid())?,
            BasisSpec::Inline(vectors) => vectors
                .iter()
                .map(|pairs| {
                    let amplitudes =
                        pairs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                    FieldState::new(Arc::clone(config.psi.grid()), amplitudes)
                })
                .collect::<Result<Vec<_>>>()?,
        };

        let ergodicity_window = self.ergodicity.window.unwrap_or(1e4 * tau_pq);
        let ergodicity_samples = self.ergodicity.samples.unwrap_or(10_000);
        let observable = self
            .ergodicity
            .functional
            .unwrap_or(ObservableKind::PositionDensity);
        let observable_cell = match self.ergodicity.cell {
            Some(cell) => {
                grid.check_cell(cell)?;
                cell
            }
            None => peak_cell(&config.psi),
        };

        let mut echo = self.clone();
        echo.process = ProcessSpec {
            tau_pq: Some(tau_pq),
            dt: Some(dt),
            gamma: Some(gamma),
        };
        echo.run = RunSpec {
            duration: self.run.duration,
            replicas: Some(replicas),
            seed: Some(seed),
            coincidence_window: Some(coincidence_window),
            driver: Some(driver_mode),
        };
        echo.scans = ScanSpec {
            epsilons: epsilons.clone(),
            calibrations: calibrations.clone(),
            windows: windows.clone(),
        };
        echo.ergodicity = ErgodicitySpec {
            window: Some(ergodicity_window),
            samples: Some(ergodicity_samples),
            cell: Some(observable_cell),
            functional: Some(observable),
        };

        Ok(ResolvedScenario {
            echo,
            config,
            epsilons,
            calibrations,
            windows,
            basis,
            ergodicity_window,
            ergodicity_samples,
            observable_cell,
            observable,
        })
    }
}

/// Cell where `|psi|` peaks (first one on ties).
fn peak_cell(psi: &FieldState) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, a) in psi.amplitudes().iter().enumerate() {
        let v = a.norm_sqr();
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

fn hadamard_basis(grid: &Arc<Grid>) -> Result<Vec<FieldState>> {
    if grid.len() != 2 {
        return Err(Error::Scenario(format!(
            "hadamard basis needs a 2-cell grid, got {} cells",
            grid.len()
        )));
    }
    let s = 1.0 / (2.0 * grid.cell_volume()).sqrt();
    Ok(vec![
        FieldState::from_real(Arc::clone(grid), &[s, s])?,
        FieldState::from_real(Arc::clone(grid), &[s, -s])?,
    ])
}

/// Named signal shapes on a 1D grid.
fn preset_shape(name: &str, grid: &Arc<Grid>) -> Result<FieldState> {
    if grid.dim() != 1 {
        return Err(Error::Scenario(format!(
            "psi preset {name:?} needs a 1D grid"
        )));
    }
    let n = grid.len();
    match name {
        "uniform" => FieldState::from_real(Arc::clone(grid), &vec![1.0; n]),
        "gaussian_packet" => {
            let center = (n as f64 - 1.0) / 2.0;
            let sigma = n as f64 / 8.0;
            let values: Vec<f64> = (0..n)
                .map(|i| (-((i as f64 - center) / sigma).powi(2) / 2.0).exp())
                .collect();
            FieldState::from_real(Arc::clone(grid), &values)
        }
        "two_peak" => {
            if n < 4 || !n.is_multiple_of(2) {
                return Err(Error::Scenario(
                    "two_peak needs an even grid of at least 4 cells".into(),
                ));
            }
            let half = n / 2;
            let sigma = n as f64 / 16.0;
            let bump = |i: usize, center: f64| {
                (-((i as f64 - center) / sigma).powi(2) / 2.0).exp()
            };
            let left_center = half as f64 / 2.0 - 0.5;
            let right_center = half as f64 * 1.5 - 0.5;
            let mut values: Vec<f64> = (0..n)
                .map(|i| {
                    if i < half {
                        bump(i, left_center)
                    } else {
                        bump(i, right_center)
                    }
                })
                .collect();
            // Scale the right bump so the halves carry energy 1 : 4 exactly,
            // putting the Born weights at (0.2, 0.8).
            let energy = |slice: &[f64]| slice.iter().map(|v| v * v).sum::<f64>();
            let left = energy(&values[..half]);
            let right = energy(&values[half..]);
            let scale = (4.0 * left / right).sqrt();
            for v in &mut values[half..] {
                *v *= scale;
            }
            FieldState::from_real(Arc::clone(grid), &values)
        }
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// Load a field state from a structured text file.
///
/// Format: optional `#` comment lines, one `dv <value>` line, then one
/// record per cell: `<coord...> <re> <im>` with 1 to 3 coordinate columns.
/// Records must be ordered lexicographically by coordinate.
pub fn load_field_file(path: impl AsRef<Path>) -> Result<(Arc<Grid>, FieldState)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let diag = |line: usize, msg: String| {
        Error::Scenario(format!("{}:{line}: {msg}", path.display()))
    };

    let mut dv: Option<f64> = None;
    let mut dim: Option<usize> = None;
    let mut points = Vec::new();
    let mut amplitudes = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "dv" {
            if fields.len() != 2 {
                return Err(diag(lineno, "expected `dv <value>`".into()));
            }
            let value: f64 = fields[1]
                .parse()
                .map_err(|e| diag(lineno, format!("bad dv value: {e}")))?;
            dv = Some(value);
            continue;
        }
        let ncols = fields.len();
        if !(3..=5).contains(&ncols) {
            return Err(diag(
                lineno,
                format!("expected `<coord...> <re> <im>` with 1-3 coordinates, got {ncols} columns"),
            ));
        }
        let this_dim = ncols - 2;
        if *dim.get_or_insert(this_dim) != this_dim {
            return Err(diag(lineno, "inconsistent coordinate column count".into()));
        }
        let mut nums = Vec::with_capacity(ncols);
        for f in &fields {
            nums.push(
                f.parse::<f64>()
                    .map_err(|e| diag(lineno, format!("bad number {f:?}: {e}")))?,
            );
        }
        let mut point: Point = [0.0; 3];
        point[..this_dim].copy_from_slice(&nums[..this_dim]);
        points.push(point);
        amplitudes.push(Complex64::new(nums[this_dim], nums[this_dim + 1]));
    }

    let dv = dv.ok_or_else(|| {
        Error::Scenario(format!("{}: missing `dv <value>` line", path.display()))
    })?;
    let dim = dim.ok_or_else(|| {
        Error::Scenario(format!("{}: no field records found", path.display()))
    })?;
    let grid = Grid::new(dim, points, dv)
        .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
    let psi = FieldState::new(Arc::clone(&grid), amplitudes)?;
    Ok((grid, psi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_fills_documented_defaults() {
        let text = r#"{
            "grid": { "cells": [4] },
            "psi": { "preset": "uniform" },
            "detectors": [
                { "id": "A", "range": [0, 2] },
                { "id": "B", "range": [2, 4] }
            ],
            "threshold": { "calibration": 1.0 },
            "run": { "duration": 10.0 }
        }"#;
        let scenario = Scenario::from_json(text).unwrap();
        let resolved = scenario.resolve().unwrap();
        let p = &resolved.config.process;
        assert_eq!(p.tau_pq, 1e-4);
        assert_eq!(p.dt, 1e-5); // tau_pq / 10
        assert_eq!(p.gamma, 1.0);
        assert_eq!(p.seed, 0);
        assert_eq!(resolved.config.replicas, 1);
        assert_eq!(resolved.config.coincidence_window, 1e-4); // 10 dt
        assert_eq!(resolved.config.driver_mode, DriverMode::Stochastic);
        // defaults echoed for provenance
        assert_eq!(resolved.echo.process.dt, Some(1e-5));
        assert_eq!(resolved.echo.run.seed, Some(0));
        assert_eq!(resolved.epsilons.len(), 3);
    }

    #[test]
    fn dt_default_follows_custom_tau() {
        let text = r#"{
            "grid": { "cells": [2] },
            "psi": { "preset": "uniform" },
            "detectors": [ { "id": "A", "cells": [0] } ],
            "threshold": { "epsilon": 0.5 },
            "process": { "tau_pq": 0.002 },
            "run": { "duration": 20.0 }
        }"#;
        let resolved = Scenario::from_json(text).unwrap().resolve().unwrap();
        assert_eq!(resolved.config.process.dt, 0.0002);
    }

    #[test]
    fn overlapping_regions_are_diagnosed() {
        let text = r#"{
            "grid": { "cells": [4] },
            "psi": { "preset": "uniform" },
            "detectors": [
                { "id": "A", "range": [0, 3] },
                { "id": "B", "range": [2, 4] }
            ],
            "threshold": { "calibration": 1.0 },
            "run": { "duration": 10.0 }
        }"#;
        let err = Scenario::from_json(text).unwrap().resolve().unwrap_err();
        assert!(
            err.to_string().contains("regions must be disjoint"),
            "{err}"
        );
    }

    #[test]
    fn missing_fields_are_named() {
        let err = Scenario::from_json("{}").unwrap_err();
        assert!(err.to_string().contains("missing field"), "{err}");
        let err = Scenario::from_json(r#"{ "grid": { "cells": [2] } }"#).unwrap_err();
        assert!(err.to_string().contains("psi"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{
            "grid": { "cells": [2], "volume": 1.0 },
            "psi": { "preset": "uniform" },
            "detectors": [],
            "threshold": { "calibration": 1.0 },
            "run": { "duration": 10.0 }
        }"#;
        let err = Scenario::from_json(text).unwrap_err();
        assert!(err.to_string().contains("volume"), "{err}");
    }

    #[test]
    fn two_peak_preset_pins_born_weights() {
        let resolved = Scenario::preset("two_peak").unwrap().resolve().unwrap();
        let psi = resolved.config.psi.normalize().unwrap();
        let left: Vec<usize> = (0..16).collect();
        let right: Vec<usize> = (16..32).collect();
        let p_left = psi.born_probability(&left).unwrap();
        let p_right = psi.born_probability(&right).unwrap();
        assert!((p_left - 0.2).abs() < 1e-12, "left weight {p_left}");
        assert!((p_right - 0.8).abs() < 1e-12, "right weight {p_right}");
    }

    #[test]
    fn all_presets_resolve() {
        for name in PRESET_NAMES {
            let resolved = Scenario::preset(name).unwrap().resolve().unwrap();
            assert!(resolved.config.validate().is_ok(), "{name}");
        }
        assert!(matches!(
            Scenario::preset("nope"),
            Err(Error::UnknownPreset(_))
        ));
    }

    #[test]
    fn field_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("psi.txt");
        std::fs::write(
            &path,
            "# test field\ndv 0.5\n0.25 1.0 0.0\n0.75 0.0 -2.0\n",
        )
        .unwrap();
        let (grid, psi) = load_field_file(&path).unwrap();
        assert_eq!(grid.len(), 2);
        assert_eq!(grid.cell_volume(), 0.5);
        assert_eq!(psi.amplitude(0), Complex64::new(1.0, 0.0));
        assert_eq!(psi.amplitude(1), Complex64::new(0.0, -2.0));
        assert!((psi.norm_squared() - 0.5 * 5.0).abs() < 1e-15);
    }

    #[test]
    fn field_file_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, "dv 1.0\n0.5 zzz 0.0\n").unwrap();
        let err = load_field_file(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }

    #[test]
    fn hadamard_needs_two_cells() {
        let text = r#"{
            "grid": { "cells": [4] },
            "psi": { "preset": "uniform" },
            "detectors": [ { "id": "A", "range": [0, 4] } ],
            "threshold": { "calibration": 1.0 },
            "run": { "duration": 10.0 },
            "basis": "hadamard"
        }"#;
        let err = Scenario::from_json(text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("2-cell"), "{err}");
    }

    #[test]
    fn two_dim_grid_builds_lexicographically() {
        let spec = GridSpec {
            cells: vec![3, 2],
            extent: Some(vec![[0.0, 3.0], [0.0, 2.0]]),
            dv: None,
        };
        let grid = spec.build().unwrap();
        assert_eq!(grid.len(), 6);
        assert_eq!(grid.dim(), 2);
        assert_eq!(grid.cell_volume(), 1.0);
        assert_eq!(grid.points()[0][..2], [0.5, 0.5]);
        assert_eq!(grid.points()[1][..2], [0.5, 1.5]);
        assert_eq!(grid.points()[2][..2], [1.5, 0.5]);
    }
}
