//! Right-hand sides of the three model equations and their linear growth
//! rates.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Field, Grid1D};
use crate::spectral::RealSpectral;

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// `u_t = nu u_xx + alpha u - u^3` with homogeneous Neumann ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChafeeInfanteParams {
    pub nu: f64,
    pub alpha: f64,
    pub length: f64,
}

impl ChafeeInfanteParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("nu", self.nu)?;
        require_positive("alpha", self.alpha)?;
        require_positive("length", self.length)
    }

    /// Growth rate of `cos(k pi x / L)` about zero.
    pub fn growth_rate(&self, k: usize) -> f64 {
        self.alpha - self.nu * (k as f64 * PI / self.length).powi(2)
    }

    /// Growth rate of the same mode under the 3-point Laplacian.
    pub fn discrete_growth_rate(&self, k: usize, dx: f64) -> f64 {
        let s = (k as f64 * PI * dx / (2.0 * self.length)).sin();
        self.alpha - self.nu * 4.0 * s * s / (dx * dx)
    }
}

/// `u_t = -gamma u_xx - nu u_xxxx - u u_x` on a periodic domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KseParams {
    pub nu: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "two_pi")]
    pub length: f64,
    /// Apply the 2/3 rule in the nonlinear term. Off by default.
    #[serde(default)]
    pub dealias: bool,
}

fn one() -> f64 {
    1.0
}

fn two_pi() -> f64 {
    2.0 * PI
}

impl KseParams {
    pub fn new(nu: f64) -> Self {
        Self {
            nu,
            gamma: 1.0,
            length: 2.0 * PI,
            dealias: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("nu", self.nu)?;
        require_positive("gamma", self.gamma)?;
        require_positive("length", self.length)
    }
}

/// Growth rate `gamma q^2 - nu q^4` with `q = 2 pi k / L`.
pub fn kse_linear_symbol(k: i64, p: &KseParams) -> f64 {
    let q = 2.0 * PI * k as f64 / p.length;
    p.gamma * q * q - p.nu * q.powi(4)
}

/// Time-varying perturbation of the heat of reaction.
#[derive(Clone, Default)]
pub enum Uncertainty {
    #[default]
    None,
    Sinusoid {
        amplitude: f64,
        omega: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Uncertainty {
    /// `theta(t) = sin(0.524 t)`.
    pub fn standard() -> Self {
        Uncertainty::Sinusoid {
            amplitude: 1.0,
            omega: 0.524,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Uncertainty::None => 0.0,
            Uncertainty::Sinusoid { amplitude, omega } => amplitude * (omega * t).sin(),
            Uncertainty::Custom(f) => f(t),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Uncertainty::None)
    }
}

impl fmt::Debug for Uncertainty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Uncertainty::None => write!(f, "None"),
            Uncertainty::Sinusoid { amplitude, omega } => {
                write!(f, "Sinusoid {{ amplitude: {amplitude}, omega: {omega} }}")
            }
            Uncertainty::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Catalytic rod on `[0, pi]` with Dirichlet ends:
/// `u_t = u_xx + beta_T(t)(exp(-gamma/(1+u)) - exp(-gamma)) + beta_U(control - u)`.
#[derive(Debug, Clone)]
pub struct CatalyticRodParams {
    pub beta_t: f64,
    pub beta_u: f64,
    pub gamma_act: f64,
    pub uncertainty: Uncertainty,
    pub length: f64,
}

impl Default for CatalyticRodParams {
    fn default() -> Self {
        Self {
            beta_t: 50.0,
            beta_u: 2.0,
            gamma_act: 4.0,
            uncertainty: Uncertainty::None,
            length: PI,
        }
    }
}

impl CatalyticRodParams {
    pub fn validate(&self) -> Result<()> {
        require_positive("beta_T", self.beta_t)?;
        require_positive("beta_U", self.beta_u)?;
        require_positive("gamma", self.gamma_act)?;
        require_positive("length", self.length)
    }

    pub fn beta_t_at(&self, t: f64) -> f64 {
        self.beta_t + self.uncertainty.eval(t)
    }

    /// Linear growth rate of `sin(k pi x / L)` about zero with the nominal
    /// heat of reaction.
    pub fn growth_rate(&self, k: usize) -> f64 {
        let q = k as f64 * PI / self.length;
        -q * q + self.beta_t * self.gamma_act * (-self.gamma_act).exp() - self.beta_u
    }
}

#[derive(Debug, Clone)]
pub enum Model {
    ChafeeInfante(ChafeeInfanteParams),
    Kse(KseParams),
    CatalyticRod(CatalyticRodParams),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::ChafeeInfante(_) => "chafee_infante",
            Model::Kse(_) => "kse",
            Model::CatalyticRod(_) => "catalytic_rod",
        }
    }

    pub fn boundary(&self) -> Boundary {
        match self {
            Model::ChafeeInfante(_) => Boundary::Neumann,
            Model::Kse(_) => Boundary::Periodic,
            Model::CatalyticRod(_) => Boundary::Dirichlet,
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            Model::ChafeeInfante(p) => p.length,
            Model::Kse(p) => p.length,
            Model::CatalyticRod(p) => p.length,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::ChafeeInfante(p) => p.validate(),
            Model::Kse(p) => p.validate(),
            Model::CatalyticRod(p) => p.validate(),
        }
    }
}

fn check_input(u: &Field, boundary: Boundary, control: Option<&Field>) -> Result<()> {
    if u.grid().boundary() != boundary {
        return Err(Error::InvalidGrid(format!(
            "model needs a {boundary:?} grid, got {:?}",
            u.grid().boundary()
        )));
    }
    if let Some(c) = control {
        u.check_same_grid(c)?;
    }
    Ok(())
}

/// Chafee-Infante tendency on raw slices. Neumann ends use the reflected
/// ghost value `u_{-1} = u_1`.
pub fn ci_rhs_into(u: &[f64], dx: f64, p: &ChafeeInfanteParams, control: Option<&[f64]>, out: &mut [f64]) {
    let n = u.len();
    let c = p.nu / (dx * dx);
    out[0] = c * 2.0 * (u[1] - u[0]);
    for j in 1..n - 1 {
        out[j] = c * (u[j + 1] - 2.0 * u[j] + u[j - 1]);
    }
    out[n - 1] = c * 2.0 * (u[n - 2] - u[n - 1]);
    for (o, &v) in out.iter_mut().zip(u) {
        *o += p.alpha * v - v * v * v;
    }
    if let Some(ctrl) = control {
        for (o, c) in out.iter_mut().zip(ctrl) {
            *o += c;
        }
    }
}

/// `nu u_xx + alpha u - u^3 + control`, where `control` is already
/// multiplied by `-mu`.
pub fn ci_rhs(u: &Field, p: &ChafeeInfanteParams, control: Option<&Field>) -> Result<Field> {
    check_input(u, Boundary::Neumann, control)?;
    let mut out = vec![0.0; u.len()];
    ci_rhs_into(u.values(), u.grid().dx(), p, control.map(|c| c.values()), &mut out);
    Field::new(*u.grid(), out)
}

/// Catalytic rod tendency on raw slices. End values stay zero.
pub fn rod_rhs_into(
    u: &[f64],
    grid: &Grid1D,
    p: &CatalyticRodParams,
    t: f64,
    control: Option<&[f64]>,
    out: &mut [f64],
) -> Result<()> {
    let n = u.len();
    if let Some((index, &v)) = u.iter().enumerate().find(|(_, v)| 1.0 + **v <= 0.0) {
        return Err(Error::Singularity {
            index,
            x: grid.x(index),
            value: 1.0 + v,
        });
    }
    let dx2 = grid.dx().powi(2);
    let beta_t = p.beta_t_at(t);
    let base = (-p.gamma_act).exp();
    out[0] = 0.0;
    out[n - 1] = 0.0;
    for j in 1..n - 1 {
        let v = u[j];
        let diffusion = (u[j + 1] - 2.0 * v + u[j - 1]) / dx2;
        let reaction = beta_t * ((-p.gamma_act / (1.0 + v)).exp() - base);
        let c = control.map_or(0.0, |c| c[j]);
        out[j] = diffusion + reaction + p.beta_u * (c - v);
    }
    Ok(())
}

pub fn rod_rhs(u: &Field, p: &CatalyticRodParams, t: f64, control: Option<&Field>) -> Result<Field> {
    check_input(u, Boundary::Dirichlet, control)?;
    let mut out = vec![0.0; u.len()];
    rod_rhs_into(u.values(), u.grid(), p, t, control.map(|c| c.values()), &mut out)?;
    Field::new(*u.grid(), out)
}

/// Pseudo-spectral KSE operator pieces on a periodic grid.
#[derive(Debug, Clone)]
pub struct KseOperator {
    params: KseParams,
    spectral: RealSpectral,
    odd_q: Vec<f64>,
    keep: Vec<bool>,
    u: Vec<f64>,
    sq: Vec<f64>,
    work: Vec<Complex64>,
}

impl KseOperator {
    pub fn new(params: KseParams, n_points: usize) -> Result<Self> {
        params.validate()?;
        let spectral = RealSpectral::new(n_points, params.length);
        let odd_q = spectral.odd_wavenumbers();
        let cutoff = n_points / 3;
        let keep = (0..spectral.n_modes())
            .map(|m| !params.dealias || m <= cutoff)
            .collect();
        let n_modes = spectral.n_modes();
        Ok(Self {
            params,
            spectral,
            odd_q,
            keep,
            u: vec![0.0; n_points],
            sq: vec![0.0; n_points],
            work: vec![Complex64::new(0.0, 0.0); n_modes],
        })
    }

    pub fn params(&self) -> &KseParams {
        &self.params
    }

    pub fn spectral(&mut self) -> &mut RealSpectral {
        &mut self.spectral
    }

    pub fn n_modes(&self) -> usize {
        self.spectral.n_modes()
    }

    /// Linear symbol per stored mode.
    pub fn symbol(&self) -> Vec<f64> {
        self.spectral
            .wavenumbers()
            .iter()
            .map(|q| self.params.gamma * q * q - self.params.nu * q.powi(4))
            .collect()
    }

    /// Transform of `-(1/2)(u^2)_x`. Also leaves `u` (physical) available
    /// through [`KseOperator::last_physical`].
    pub fn nonlinear(&mut self, u_hat: &[Complex64], out: &mut [Complex64]) {
        self.work.copy_from_slice(u_hat);
        for (c, &k) in self.work.iter_mut().zip(&self.keep) {
            if !k {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.spectral.inverse(&self.work, &mut self.u);
        for (s, v) in self.sq.iter_mut().zip(&self.u) {
            *s = v * v;
        }
        self.spectral.forward(&self.sq, out);
        for ((o, &q), &k) in out.iter_mut().zip(&self.odd_q).zip(&self.keep) {
            *o *= if k { Complex64::new(0.0, -0.5 * q) } else { Complex64::new(0.0, 0.0) };
        }
    }

    pub fn last_physical(&self) -> &[f64] {
        &self.u
    }
}

/// `-(1/2)(u^2)_x` for a field on a periodic grid, returned in physical
/// space.
pub fn kse_nonlinear_field(u: &Field, p: &KseParams) -> Result<Field> {
    check_input(u, Boundary::Periodic, None)?;
    let mut op = KseOperator::new(*p, u.len())?;
    let hat = op.spectral.forward_vec(u.values());
    let mut out = vec![Complex64::new(0.0, 0.0); hat.len()];
    op.nonlinear(&hat, &mut out);
    Field::new(*u.grid(), op.spectral.inverse_vec(&out))
}

/// Number of linearly unstable modes about `u = 0`.
pub fn count_unstable_modes(model: &Model) -> usize {
    match model {
        Model::ChafeeInfante(p) => {
            let bound = p.alpha * p.length * p.length / (PI * PI * p.nu);
            (1..).take_while(|&k| ((k * k) as f64) < bound).count()
        }
        Model::Kse(p) => (1..).take_while(|&k| kse_linear_symbol(k, p) > 0.0).count(),
        Model::CatalyticRod(p) => (1..).take_while(|&k| p.growth_rate(k) > 0.0).count(),
    }
}
