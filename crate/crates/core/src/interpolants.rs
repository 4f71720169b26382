//! Finite-rank interpolant operators `I_h` on a control mesh of `N` cells
//! `J_k = [k h, (k+1) h)`, `h = L / N`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Differentiator, Field, Grid1D};
use crate::parallel::{map_indexed, Execution};
use crate::spectral::RealSpectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    FourierModes,
    FiniteVolume,
    Nodal,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::FourierModes => "fourier_modes",
            Family::FiniteVolume => "finite_volume",
            Family::Nodal => "nodal",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier_modes" | "fourier" => Ok(Family::FourierModes),
            "finite_volume" | "fv" => Ok(Family::FiniteVolume),
            "nodal" => Ok(Family::Nodal),
            other => Err(Error::InvalidInterpolant(format!("unknown family '{other}'"))),
        }
    }
}

/// Where the sampled node sits inside each cell, as a fraction of `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NodeRule {
    #[default]
    Midpoint,
    Left,
    Custom(Vec<f64>),
}

impl NodeRule {
    fn offset(&self, k: usize) -> f64 {
        match self {
            NodeRule::Midpoint => 0.5,
            NodeRule::Left => 0.0,
            NodeRule::Custom(offsets) => offsets.get(k).copied().unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolantSpec {
    pub family: Family,
    pub n_actuators: usize,
    #[serde(default)]
    pub mean_zero: bool,
    #[serde(default)]
    pub node_rule: NodeRule,
    #[serde(default)]
    pub c_est: Option<f64>,
}

impl InterpolantSpec {
    pub fn new(family: Family, n_actuators: usize) -> Self {
        Self {
            family,
            n_actuators,
            mean_zero: false,
            node_rule: NodeRule::Midpoint,
            c_est: None,
        }
    }

    pub fn with_mean_zero(mut self, on: bool) -> Self {
        self.mean_zero = on;
        self
    }

    pub fn with_node_rule(mut self, rule: NodeRule) -> Self {
        self.node_rule = rule;
        self
    }

    /// Control mesh width `h = L / N`.
    pub fn h(&self, length: f64) -> f64 {
        length / self.n_actuators as f64
    }
}

#[derive(Debug, Clone)]
enum Kind {
    PeriodicModes {
        spectral: RealSpectral,
        hat: Vec<Complex64>,
    },
    CosineModes {
        basis: Vec<Vec<f64>>,
        norms: Vec<f64>,
    },
    FiniteVolume {
        cell_weight: Vec<f64>,
    },
    Nodal {
        taps: Vec<(usize, usize, f64)>,
    },
}

/// An interpolant bound to a particular grid, with all geometry
/// precomputed. Reusable across time steps.
#[derive(Debug, Clone)]
pub struct Interpolant {
    spec: InterpolantSpec,
    grid: Grid1D,
    cell: Vec<usize>,
    weights: Vec<f64>,
    kind: Kind,
    cell_values: Vec<f64>,
}

impl Interpolant {
    pub fn new(spec: &InterpolantSpec, grid: Grid1D) -> Result<Self> {
        let n = grid.n_points();
        let big_n = spec.n_actuators;
        if big_n == 0 {
            return Err(Error::InvalidInterpolant("N must be positive".into()));
        }
        if big_n > n {
            return Err(Error::InvalidInterpolant(format!(
                "N = {big_n} exceeds the {n} grid points"
            )));
        }
        let cell: Vec<usize> = (0..n).map(|j| grid.cell_of(j, big_n)).collect();
        let weights = grid.weights();
        let kind = match spec.family {
            Family::FourierModes => {
                if 2 * big_n >= n {
                    return Err(Error::InvalidInterpolant(format!(
                        "Fourier projection needs N < n_points/2, got N = {big_n} with {n} points"
                    )));
                }
                match grid.boundary() {
                    Boundary::Periodic => {
                        let spectral = RealSpectral::new(n, grid.length());
                        let hat = vec![Complex64::new(0.0, 0.0); spectral.n_modes()];
                        Kind::PeriodicModes { spectral, hat }
                    }
                    Boundary::Neumann => {
                        let x = grid.coords();
                        let basis: Vec<Vec<f64>> = (0..=big_n)
                            .map(|k| {
                                x.iter()
                                    .map(|&x| (k as f64 * PI * x / grid.length()).cos())
                                    .collect()
                            })
                            .collect();
                        let norms = basis
                            .iter()
                            .map(|b| b.iter().zip(&weights).map(|(v, w)| w * v * v).sum())
                            .collect();
                        Kind::CosineModes { basis, norms }
                    }
                    Boundary::Dirichlet => {
                        return Err(Error::InvalidInterpolant(
                            "Fourier projection is defined for periodic or Neumann grids".into(),
                        ))
                    }
                }
            }
            Family::FiniteVolume => {
                let mut cell_weight = vec![0.0; big_n];
                for (j, &k) in cell.iter().enumerate() {
                    cell_weight[k] += weights[j];
                }
                if let Some(k) = cell_weight.iter().position(|&w| w <= 0.0) {
                    return Err(Error::InvalidInterpolant(format!(
                        "cell {k} contains no grid points"
                    )));
                }
                Kind::FiniteVolume { cell_weight }
            }
            Family::Nodal => {
                let h = spec.h(grid.length());
                let mut taps = Vec::with_capacity(big_n);
                for k in 0..big_n {
                    let off = spec.node_rule.offset(k);
                    let lo = k as f64 * h;
                    let hi = lo + h;
                    let x = lo + off * h;
                    let closed_end = k + 1 == big_n && !grid.boundary().is_periodic();
                    let inside = off >= 0.0 && (off < 1.0 || (closed_end && off <= 1.0));
                    if !inside {
                        return Err(Error::NodeOutsideCell { node: k, x, lo, hi });
                    }
                    taps.push(linear_tap(&grid, x));
                }
                Kind::Nodal { taps }
            }
        };
        Ok(Self {
            spec: spec.clone(),
            grid,
            cell,
            weights,
            kind,
            cell_values: vec![0.0; big_n],
        })
    }

    pub fn spec(&self) -> &InterpolantSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.spec.h(self.grid.length())
    }

    /// Cell index of every grid point.
    pub fn cells(&self) -> &[usize] {
        &self.cell
    }

    /// Observed values per cell (finite-volume averages or nodal samples)
    /// from the last call to [`Interpolant::apply_into`]. Empty meaning for
    /// the Fourier family.
    pub fn cell_values(&self) -> &[f64] {
        &self.cell_values
    }

    /// Apply `I_h` (and the mean-zero shift when the spec asks for it).
    pub fn apply_into(&mut self, u: &[f64], out: &mut [f64]) {
        self.apply_raw(u, out);
        if self.spec.mean_zero {
            let m = self.grid.integrate(out) / self.grid.length();
            out.iter_mut().for_each(|v| *v -= m);
        }
    }

    fn apply_raw(&mut self, u: &[f64], out: &mut [f64]) {
        let big_n = self.spec.n_actuators;
        match &mut self.kind {
            Kind::PeriodicModes { spectral, hat } => {
                spectral.forward(u, hat);
                for c in hat.iter_mut().skip(big_n + 1) {
                    *c = Complex64::new(0.0, 0.0);
                }
                spectral.inverse(hat, out);
            }
            Kind::CosineModes { basis, norms } => {
                out.iter_mut().for_each(|v| *v = 0.0);
                for (b, &nrm) in basis.iter().zip(norms.iter()) {
                    let a: f64 = b
                        .iter()
                        .zip(u)
                        .zip(&self.weights)
                        .map(|((b, u), w)| w * b * u)
                        .sum::<f64>()
                        / nrm;
                    for (o, bv) in out.iter_mut().zip(b) {
                        *o += a * bv;
                    }
                }
            }
            Kind::FiniteVolume { cell_weight } => {
                self.cell_values.iter_mut().for_each(|v| *v = 0.0);
                for (j, &k) in self.cell.iter().enumerate() {
                    self.cell_values[k] += self.weights[j] * u[j];
                }
                for (v, w) in self.cell_values.iter_mut().zip(cell_weight.iter()) {
                    *v /= w;
                }
                for (o, &k) in out.iter_mut().zip(&self.cell) {
                    *o = self.cell_values[k];
                }
            }
            Kind::Nodal { taps } => {
                for (v, &(a, b, t)) in self.cell_values.iter_mut().zip(taps.iter()) {
                    *v = (1.0 - t) * u[a] + t * u[b];
                }
                for (o, &k) in out.iter_mut().zip(&self.cell) {
                    *o = self.cell_values[k];
                }
            }
        }
    }

    pub fn apply(&mut self, field: &Field) -> Result<Field> {
        if !field.grid().same_shape(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let mut out = vec![0.0; self.grid.n_points()];
        self.apply_into(field.values(), &mut out);
        Field::new(self.grid, out)
    }
}

/// Linear-interpolation weights for evaluating a grid function at `x`.
fn linear_tap(grid: &Grid1D, x: f64) -> (usize, usize, f64) {
    let n = grid.n_points();
    let s = x / grid.dx();
    if grid.boundary().is_periodic() {
        let j = (s.floor() as usize).min(n - 1);
        let t = s - j as f64;
        (j, (j + 1) % n, t)
    } else {
        let j = (s.floor() as usize).min(n - 2);
        let t = s - j as f64;
        (j, j + 1, t)
    }
}

/// Projection onto the first `N` Fourier modes: complex exponentials with
/// `|m| <= N` on periodic grids, `cos(k pi x / L)` for `k <= N` on Neumann
/// grids.
pub fn fourier_projection(field: &Field, n_modes: usize) -> Result<Field> {
    Interpolant::new(&InterpolantSpec::new(Family::FourierModes, n_modes), *field.grid())?
        .apply(field)
}

/// Piecewise-constant field of trapezoid-weighted cell averages.
pub fn finite_volume_interpolant(field: &Field, n_cells: usize) -> Result<Field> {
    Interpolant::new(&InterpolantSpec::new(Family::FiniteVolume, n_cells), *field.grid())?
        .apply(field)
}

/// Piecewise-constant field of point values at one node per cell.
pub fn nodal_interpolant(field: &Field, n_cells: usize, rule: &NodeRule) -> Result<Field> {
    let spec = InterpolantSpec::new(Family::Nodal, n_cells).with_node_rule(rule.clone());
    Interpolant::new(&spec, *field.grid())?.apply(field)
}

/// Apply the interpolant described by `spec`, including the mean-zero shift.
pub fn apply_interpolant(field: &Field, spec: &InterpolantSpec) -> Result<Field> {
    Interpolant::new(spec, *field.grid())?.apply(field)
}

pub fn mean_zero_shift(field: &Field) -> Result<Field> {
    let m = field.mean();
    field.map(|v| v - m)
}

/// Sum of squared cell averages.
pub fn gamma_squared(field: &Field, n_cells: usize) -> Result<f64> {
    let mut op = Interpolant::new(&InterpolantSpec::new(Family::FiniteVolume, n_cells), *field.grid())?;
    let mut out = vec![0.0; field.len()];
    op.apply_into(field.values(), &mut out);
    Ok(op.cell_values().iter().map(|v| v * v).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationError {
    pub l2_error: f64,
    pub h1_seminorm: f64,
    /// `l2_error / (h * h1_seminorm)`, zero for constant inputs.
    pub ratio: f64,
}

/// `||phi||_{L^2}` by trapezoid quadrature.
pub(crate) fn l2(grid: &Grid1D, values: &[f64]) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    grid.integrate(&sq).max(0.0).sqrt()
}

pub fn interpolation_error(field: &Field, spec: &InterpolantSpec) -> Result<InterpolationError> {
    let grid = *field.grid();
    let approx = apply_interpolant(field, spec)?;
    let diff: Vec<f64> = field
        .values()
        .iter()
        .zip(approx.values())
        .map(|(a, b)| a - b)
        .collect();
    let l2_error = l2(&grid, &diff);
    let dphi = Differentiator::new(grid).first(field.values());
    let h1_seminorm = l2(&grid, &dphi);
    let scale = field.max_abs().max(1.0);
    let ratio = if h1_seminorm <= 1e-13 * scale {
        if l2_error <= 1e-12 * scale {
            0.0
        } else {
            return Err(Error::Degenerate(format!(
                "interpolation error {l2_error} with vanishing derivative"
            )));
        }
    } else {
        l2_error / (spec.h(grid.length()) * h1_seminorm)
    };
    Ok(InterpolationError {
        l2_error,
        h1_seminorm,
        ratio,
    })
}

/// Random trigonometric polynomial with Gaussian coefficients and modes
/// `1..=max_mode`. Periodic grids use `2 pi m x / L`; bounded grids use
/// `m pi x / L`.
pub fn random_trig_polynomial(grid: Grid1D, max_mode: usize, rng: &mut ChaCha8Rng) -> Field {
    let base = if grid.boundary().is_periodic() {
        2.0 * PI / grid.length()
    } else {
        PI / grid.length()
    };
    let coeffs: Vec<(f64, f64)> = (0..max_mode)
        .map(|_| (StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    let c0: f64 = StandardNormal.sample(rng);
    Field::from_fn(grid, |x| {
        c0 + coeffs
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let q = base * (i + 1) as f64;
                a * (q * x).cos() + b * (q * x).sin()
            })
            .sum::<f64>()
    })
    .expect("trigonometric polynomial values are finite")
}

/// Deterministic per-sample generator: stream `index` of the seeded ChaCha
/// generator, so sample order does not depend on scheduling.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Highest mode used when sampling for the constant. Must exceed `N` for the
/// Fourier family, whose projection reproduces lower modes exactly.
pub fn estimation_band(spec: &InterpolantSpec, grid: &Grid1D) -> usize {
    let cap = (grid.n_points() / 4).max(6);
    let band = (2 * spec.n_actuators).clamp(6, cap);
    match spec.family {
        Family::FourierModes => band.max(spec.n_actuators + 1),
        _ => band,
    }
}

/// Empirical interpolation constant: the largest `||phi - I_h phi|| /
/// (h ||phi_x||)` over random band-limited samples. Stored in `spec.c_est`.
pub fn estimate_interpolation_constant(
    spec: &mut InterpolantSpec,
    grid: Grid1D,
    sample_count: usize,
    seed: u64,
    exec: Execution,
) -> Result<f64> {
    if sample_count == 0 {
        return Err(Error::InsufficientSamples {
            found: 0,
            required: 1,
        });
    }
    Interpolant::new(spec, grid)?;
    let band = estimation_band(spec, &grid);
    let probe = spec.clone();
    let ratios = map_indexed(sample_count, exec, |i| {
        let mut rng = sample_rng(seed, i as u64);
        let phi = random_trig_polynomial(grid, band, &mut rng);
        interpolation_error(&phi, &probe).map(|e| e.ratio)
    });
    let mut c = 0.0f64;
    for r in ratios {
        c = c.max(r?);
    }
    spec.c_est = Some(c);
    Ok(c)
}
