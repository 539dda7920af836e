//! Spatial grid, field states and normalized wave functions.
//!
//! A [`Grid`] is a finite set of cell centers with a uniform cell volume `dV`;
//! a [`FieldState`] assigns one complex amplitude per cell. The squared norm
//! `sum |psi(x_i)|^2 dV` is the total energy carried by the shape, and the
//! normalized [`WaveFunction`] provides [`WaveFunction::born_probability`],
//! the analytic oracle every detection run is checked against.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

/// Cell-center coordinate. Components beyond the grid dimension are zero.
pub type Point = [f64; 3];

/// Immutable spatial grid: cell centers plus a uniform cell volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    points: Vec<Point>,
    cell_volume: f64,
}

impl Grid {
    /// Build a grid from explicit cell centers. Coordinates must be strictly
    /// increasing lexicographically (first `dim` components).
    pub fn new(dim: usize, points: Vec<Point>, cell_volume: f64) -> Result<Arc<Self>> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one cell".into()));
        }
        if cell_volume <= 0.0 || !cell_volume.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "cell volume must be positive and finite, got {cell_volume}"
            )));
        }
        for p in &points {
            if p[..dim].iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidGrid("non-finite coordinate".into()));
            }
        }
        for pair in points.windows(2) {
            if pair[0][..dim] >= pair[1][..dim] {
                return Err(Error::InvalidGrid(format!(
                    "coordinates must be strictly increasing lexicographically \
                     (violated at {:?} -> {:?})",
                    &pair[0][..dim],
                    &pair[1][..dim]
                )));
            }
        }
        Ok(Arc::new(Self {
            dim,
            points,
            cell_volume,
        }))
    }

    /// Regular 1D grid of `cells` centers starting at `origin`, spaced (and
    /// with cell volume) `spacing`.
    pub fn line(origin: f64, spacing: f64, cells: usize) -> Result<Arc<Self>> {
        let points = (0..cells)
            .map(|i| [origin + (i as f64 + 0.5) * spacing, 0.0, 0.0])
            .collect();
        Self::new(1, points, spacing)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of cells.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn check_cell(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidCellIndex {
                index,
                len: self.len(),
            })
        }
    }

    /// Discrete delta at `cell`: amplitude `1/sqrt(dV)` there, zero elsewhere.
    /// Unit norm, and `inner_product(phi, delta)` sifts out
    /// `phi(x_cell) * sqrt(dV)`.
    pub fn delta_basis_element(self: &Arc<Self>, cell: usize) -> Result<FieldState> {
        self.check_cell(cell)?;
        let mut amplitudes = vec![Complex64::ZERO; self.len()];
        amplitudes[cell] = Complex64::new(1.0 / self.cell_volume.sqrt(), 0.0);
        FieldState::new(Arc::clone(self), amplitudes)
    }

    /// The full delta basis, one element per cell.
    pub fn delta_basis(self: &Arc<Self>) -> Vec<FieldState> {
        (0..self.len())
            .map(|i| self.delta_basis_element(i).expect("cell index in range"))
            .collect()
    }
}

fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Complex field amplitudes on a grid: the signal shape `psi` whose rank-1
/// covariance the random signal realizes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    grid: Arc<Grid>,
    amplitudes: Vec<Complex64>,
}

impl FieldState {
    pub fn new(grid: Arc<Grid>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: amplitudes.len(),
            });
        }
        Ok(Self { grid, amplitudes })
    }

    /// Field with the given real amplitudes (imaginary parts zero).
    pub fn from_real(grid: Arc<Grid>, values: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            values.iter().map(|&re| Complex64::new(re, 0.0)).collect(),
        )
    }

    pub fn zero(grid: Arc<Grid>) -> Self {
        let amplitudes = vec![Complex64::ZERO; grid.len()];
        Self { grid, amplitudes }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, cell: usize) -> Complex64 {
        self.amplitudes[cell]
    }

    /// Total energy `sum_i |psi(x_i)|^2 dV`.
    pub fn norm_squared(&self) -> f64 {
        let mut sum = CompensatedSum::new();
        for a in &self.amplitudes {
            sum.add(a.norm_sqr());
        }
        sum.value() * self.grid.cell_volume()
    }

    /// Discrete L2 inner product `sum_i phi(x_i) conj(e(x_i)) dV`.
    /// Conjugate-symmetric: swapping the arguments conjugates the result.
    pub fn inner_product(&self, other: &FieldState) -> Result<Complex64> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for (a, b) in self.amplitudes.iter().zip(&other.amplitudes) {
            let term = a * b.conj();
            re.add(term.re);
            im.add(term.im);
        }
        let dv = self.grid.cell_volume();
        Ok(Complex64::new(re.value() * dv, im.value() * dv))
    }

    /// Normalize to a unit-norm wave function. Errors on a zero-norm state.
    pub fn normalize(&self) -> Result<WaveFunction> {
        let norm_sq = self.norm_squared();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(Error::DegenerateFieldState);
        }
        let inv_norm = 1.0 / norm_sq.sqrt();
        let amplitudes = self.amplitudes.iter().map(|a| a * inv_norm).collect();
        Ok(WaveFunction(Self {
            grid: Arc::clone(&self.grid),
            amplitudes,
        }))
    }

    /// The field scaled by a complex constant.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            amplitudes: self.amplitudes.iter().map(|a| a * factor).collect(),
        }
    }

    /// Scale `base` by `factor` into this state's storage, reusing the
    /// allocation. Grids must already agree.
    pub(crate) fn assign_scaled(&mut self, base: &FieldState, factor: Complex64) {
        debug_assert_eq!(self.amplitudes.len(), base.amplitudes.len());
        for (dst, src) in self.amplitudes.iter_mut().zip(&base.amplitudes) {
            *dst = src * factor;
        }
    }
}

/// A normalized field state: `sum |Psi(x_i)|^2 dV = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction(FieldState);

impl WaveFunction {
    /// Wrap an already-normalized field, verifying the unit norm to 1e-12
    /// relative tolerance.
    pub fn try_from_field(field: FieldState) -> Result<Self> {
        let norm_sq = field.norm_squared();
        if (norm_sq - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "wave function norm^2 is {norm_sq}, expected 1"
            )));
        }
        Ok(Self(field))
    }

    pub fn as_field(&self) -> &FieldState {
        &self.0
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.0.grid()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.0.amplitudes()
    }

    /// Detection probability for a set of cells:
    /// `sum_{i in region} |Psi(x_i)|^2 dV`.
    ///
    /// This is the analytic oracle the simulated click statistics converge to.
    pub fn born_probability(&self, region: &[usize]) -> Result<f64> {
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let mut sum = CompensatedSum::new();
        for &cell in region {
            self.0.grid.check_cell(cell)?;
            sum.add(self.0.amplitudes[cell].norm_sqr());
        }
        Ok((sum.value() * self.0.grid.cell_volume()).clamp(0.0, 1.0))
    }
}
