use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::RealSpectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Neumann,
    Dirichlet,
}

impl Boundary {
    pub fn is_periodic(self) -> bool {
        matches!(self, Boundary::Periodic)
    }
}

/// Uniform 1-D grid on `[0, L]`.
///
/// Periodic grids exclude the point `x = L`, so `dx = L / n`. Bounded grids
/// include both ends and use `dx = L / (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    length: f64,
    n_points: usize,
    boundary: Boundary,
}

impl Grid1D {
    pub fn new(length: f64, n_points: usize, boundary: Boundary) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        let min = if boundary.is_periodic() { 2 } else { 3 };
        if n_points < min {
            return Err(Error::InvalidGrid(format!(
                "{boundary:?} grid needs at least {min} points, got {n_points}"
            )));
        }
        Ok(Self {
            length,
            n_points,
            boundary,
        })
    }

    pub fn periodic(length: f64, n_points: usize) -> Result<Self> {
        Self::new(length, n_points, Boundary::Periodic)
    }

    pub fn neumann(length: f64, n_points: usize) -> Result<Self> {
        Self::new(length, n_points, Boundary::Neumann)
    }

    pub fn dirichlet(length: f64, n_points: usize) -> Result<Self> {
        Self::new(length, n_points, Boundary::Dirichlet)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of spacing intervals: `n` when periodic, `n - 1` otherwise.
    pub fn n_intervals(&self) -> usize {
        if self.boundary.is_periodic() {
            self.n_points
        } else {
            self.n_points - 1
        }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_intervals() as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        if j == self.n_intervals() {
            self.length
        } else {
            j as f64 * self.dx()
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Composite trapezoid weights. On a periodic grid every weight is `dx`.
    pub fn weights(&self) -> Vec<f64> {
        let dx = self.dx();
        let mut w = vec![dx; self.n_points];
        if !self.boundary.is_periodic() {
            w[0] = 0.5 * dx;
            w[self.n_points - 1] = 0.5 * dx;
        }
        w
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        let dx = self.dx();
        let sum: f64 = values.iter().sum();
        if self.boundary.is_periodic() {
            dx * sum
        } else {
            dx * (sum - 0.5 * (values[0] + values[self.n_points - 1]))
        }
    }

    /// Cell index `k` in `0..n_cells` that contains grid point `j`, with
    /// cells `[k h, (k+1) h)` and the last cell closed on bounded grids.
    /// Integer arithmetic keeps membership exact at cell edges.
    pub fn cell_of(&self, j: usize, n_cells: usize) -> usize {
        let m = self.n_intervals();
        ((j * n_cells) / m).min(n_cells - 1)
    }

    pub fn same_shape(&self, other: &Grid1D) -> bool {
        self.n_points == other.n_points
            && self.boundary == other.boundary
            && self.length.to_bits() == other.length.to_bits()
    }
}

/// Real-valued state sampled on a grid. Every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                found: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index, value });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_points()],
        }
    }

    pub fn constant(grid: Grid1D, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.n_points()])
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.coords().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Spatial average `(1/L) * integral`.
    pub fn mean(&self) -> f64 {
        self.grid.integrate(&self.values) / self.grid.length()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, a: f64) -> Result<Self> {
        self.map(|v| a * v)
    }

    pub fn axpy(&self, a: f64, other: &Field) -> Result<Self> {
        self.check_same_grid(other)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Discrete derivatives consistent with the integrators: spectral on periodic
/// grids, finite differences on bounded grids.
#[derive(Debug, Clone)]
pub struct Differentiator {
    grid: Grid1D,
    spectral: Option<RealSpectral>,
}

impl Differentiator {
    pub fn new(grid: Grid1D) -> Self {
        let spectral = grid
            .boundary()
            .is_periodic()
            .then(|| RealSpectral::new(grid.n_points(), grid.length()));
        Self { grid, spectral }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// First derivative. Bounded grids use second-order central differences
    /// with one-sided second-order ends.
    pub fn first(&mut self, u: &[f64]) -> Vec<f64> {
        if let Some(s) = self.spectral.as_mut() {
            return s.derivative(u, 1);
        }
        let n = u.len();
        let dx = self.grid.dx();
        let mut d = vec![0.0; n];
        for j in 1..n - 1 {
            d[j] = (u[j + 1] - u[j - 1]) / (2.0 * dx);
        }
        d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
        d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dx);
        d
    }

    /// Second derivative. Bounded grids use the 3-point stencil inside and
    /// one-sided second-order stencils at the ends (4 points needed).
    pub fn second(&mut self, u: &[f64]) -> Vec<f64> {
        if let Some(s) = self.spectral.as_mut() {
            return s.derivative(u, 2);
        }
        let n = u.len();
        let dx2 = self.grid.dx().powi(2);
        let mut d = vec![0.0; n];
        for j in 1..n - 1 {
            d[j] = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / dx2;
        }
        if n >= 4 {
            d[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / dx2;
            d[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / dx2;
        } else {
            d[0] = d[1];
            d[n - 1] = d[n - 2];
        }
        d
    }
}
