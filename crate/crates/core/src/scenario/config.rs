//! Scenario configuration: a nested TOML document that maps onto a
//! [`Simulation`] plus output requests.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::control::ControlConfig;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::integrators::{Schedule, Simulation};
use crate::interpolants::{Family, InterpolantSpec, NodeRule};
use crate::models::{CatalyticRodParams, ChafeeInfanteParams, KseParams, Model, Uncertainty};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelId {
    ChafeeInfante,
    Kse,
    CatalyticRod,
}

impl ModelId {
    pub fn name(self) -> &'static str {
        match self {
            ModelId::ChafeeInfante => "chafee_infante",
            ModelId::Kse => "kse",
            ModelId::CatalyticRod => "catalytic_rod",
        }
    }

    pub fn default_length(self) -> f64 {
        match self {
            ModelId::ChafeeInfante => 1.0,
            ModelId::Kse => 2.0 * PI,
            ModelId::CatalyticRod => PI,
        }
    }

    pub fn default_n(self) -> usize {
        match self {
            ModelId::ChafeeInfante => 101,
            ModelId::Kse => 128,
            ModelId::CatalyticRod => 21,
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
}

/// Model parameters. Which keys apply depends on the model; keys that do
/// not apply are rejected.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// KSE anti-diffusion coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dealias: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_u: Option<f64>,
    /// Rod activation energy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_act: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty_amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty_omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub family: Family,
    pub n_actuators: usize,
    pub mu: f64,
    #[serde(default)]
    pub t_on: f64,
    #[serde(default)]
    pub mean_zero: bool,
    #[serde(default)]
    pub fold_into_symbol: bool,
    /// `midpoint` or `left`; ignored unless the family is nodal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_rule: Option<String>,
    /// Per-cell node offsets as fractions of `h`; overrides `node_rule`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_offsets: Option<Vec<f64>>,
    /// Interpolation constant for the condition checks. Estimated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

impl ControlSection {
    pub fn new(family: Family, n_actuators: usize, mu: f64) -> Self {
        Self {
            family,
            n_actuators,
            mu,
            t_on: 0.0,
            mean_zero: false,
            fold_into_symbol: false,
            node_rule: None,
            node_offsets: None,
            c: None,
        }
    }

    pub fn node_rule(&self) -> Result<NodeRule> {
        if let Some(o) = &self.node_offsets {
            return Ok(NodeRule::Custom(o.clone()));
        }
        match self.node_rule.as_deref() {
            None | Some("midpoint") => Ok(NodeRule::Midpoint),
            Some("left") => Ok(NodeRule::Left),
            Some(other) => Err(Error::Config(format!(
                "control.node_rule: expected 'midpoint' or 'left', got '{other}'"
            ))),
        }
    }

    pub fn spec(&self) -> Result<InterpolantSpec> {
        let mut s = InterpolantSpec::new(self.family, self.n_actuators)
            .with_mean_zero(self.mean_zero)
            .with_node_rule(self.node_rule()?);
        s.c_est = self.c;
        Ok(s)
    }

    pub fn to_control(&self) -> Result<ControlConfig> {
        Ok(ControlConfig::new(self.mu, self.spec()?)
            .with_t_on(self.t_on)
            .folded(self.fold_into_symbol))
    }
}

fn default_stride() -> usize {
    4
}
fn default_true() -> bool {
    true
}
fn default_threshold() -> f64 {
    0.5
}
fn default_seed() -> u64 {
    7
}
fn default_c_samples() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    #[serde(default = "default_true")]
    pub snapshots: bool,
    #[serde(default)]
    pub record_uxx: bool,
    /// Fit window for the L2 decay rate. Defaults to `[t_on, t_end]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_window: Option<[f64; 2]>,
    /// `max |u|` level that defines the onset time.
    #[serde(default = "default_threshold")]
    pub onset_threshold: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_c_samples")]
    pub c_samples: usize,
    /// Burn-in for the R2 estimate. Defaults to half the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2_burn_in: Option<f64>,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self {
            snapshot_stride: default_stride(),
            snapshots: true,
            record_uxx: false,
            decay_window: None,
            onset_threshold: default_threshold(),
            seed: default_seed(),
            c_samples: default_c_samples(),
            r2_burn_in: None,
        }
    }
}

/// Twin experiment: the truth is `initial` spun up for `spinup` time units
/// without control; the nudged copy starts from `twin.initial`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwinSection {
    pub initial: String,
    #[serde(default)]
    pub spinup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub model: ModelId,
    /// Preset name (`ci_cos3`, `kse_small`, ...) or an expression in `x`.
    pub initial: String,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    pub integrator: IntegratorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twin: Option<TwinSection>,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

/// Named initial conditions.
pub const INITIAL_PRESETS: &[&str] = &["ci_cos3", "kse_small", "kse_cos", "kse_multi", "rod_sin2"];

fn kse_cos(x: f64) -> f64 {
    x.cos() * (1.0 + x.sin())
}

fn kse_multi(x: f64) -> f64 {
    let s: f64 = (1..=5)
        .map(|n| {
            let a = n as f64 * x - n as f64 * PI;
            a.sin() + a.cos()
        })
        .sum();
    2.5 / 5f64.sqrt() * s
}

/// Sample a preset or an expression in `x` on `grid`.
pub fn initial_field(spec: &str, grid: Grid1D) -> Result<Field> {
    let f: Box<dyn Fn(f64) -> f64> = match spec.trim() {
        "ci_cos3" => Box::new(|x: f64| (3.0 * x).cos()),
        "kse_small" => Box::new(|x| 1e-10 * kse_cos(x)),
        "kse_cos" => Box::new(kse_cos),
        "kse_multi" => Box::new(kse_multi),
        "rod_sin2" => Box::new(|x: f64| 1e-3 * (2.0 * x).sin()),
        expr => {
            let e = meval::Expr::from_str(expr)
                .map_err(|err| Error::Config(format!("initial: cannot parse '{expr}': {err}")))?;
            let g = e
                .bind("x")
                .map_err(|err| Error::Config(format!("initial: '{expr}': {err}")))?;
            Box::new(g)
        }
    };
    Field::from_fn(grid, f)
}

fn reject(model: ModelId, key: &str, present: bool) -> Result<()> {
    if present {
        Err(Error::Config(format!("params.{key} does not apply to model {model}")))
    } else {
        Ok(())
    }
}

fn need(model: ModelId, key: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("params.{key} is required for model {model}")))
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn n_points(&self) -> usize {
        self.grid.n.unwrap_or_else(|| self.model.default_n())
    }

    pub fn length(&self) -> f64 {
        self.grid.length.unwrap_or_else(|| self.model.default_length())
    }

    pub fn build_grid(&self) -> Result<Grid1D> {
        let n = self.n_points();
        let l = self.length();
        match self.model {
            ModelId::ChafeeInfante => Grid1D::neumann(l, n),
            ModelId::Kse => Grid1D::periodic(l, n),
            ModelId::CatalyticRod => Grid1D::dirichlet(l, n),
        }
    }

    pub fn build_model(&self) -> Result<Model> {
        let p = &self.params;
        let id = self.model;
        let length = self.length();
        let model = match id {
            ModelId::ChafeeInfante => {
                for (k, present) in [
                    ("gamma", p.gamma.is_some()),
                    ("dealias", p.dealias.is_some()),
                    ("beta_t", p.beta_t.is_some()),
                    ("beta_u", p.beta_u.is_some()),
                    ("gamma_act", p.gamma_act.is_some()),
                    ("uncertainty_amplitude", p.uncertainty_amplitude.is_some()),
                    ("uncertainty_omega", p.uncertainty_omega.is_some()),
                ] {
                    reject(id, k, present)?;
                }
                Model::ChafeeInfante(ChafeeInfanteParams {
                    nu: need(id, "nu", p.nu)?,
                    alpha: need(id, "alpha", p.alpha)?,
                    length,
                })
            }
            ModelId::Kse => {
                for (k, present) in [
                    ("alpha", p.alpha.is_some()),
                    ("beta_t", p.beta_t.is_some()),
                    ("beta_u", p.beta_u.is_some()),
                    ("gamma_act", p.gamma_act.is_some()),
                    ("uncertainty_amplitude", p.uncertainty_amplitude.is_some()),
                    ("uncertainty_omega", p.uncertainty_omega.is_some()),
                ] {
                    reject(id, k, present)?;
                }
                Model::Kse(KseParams {
                    nu: need(id, "nu", p.nu)?,
                    gamma: p.gamma.unwrap_or(1.0),
                    length,
                    dealias: p.dealias.unwrap_or(false),
                })
            }
            ModelId::CatalyticRod => {
                for (k, present) in [
                    ("nu", p.nu.is_some()),
                    ("alpha", p.alpha.is_some()),
                    ("gamma", p.gamma.is_some()),
                    ("dealias", p.dealias.is_some()),
                ] {
                    reject(id, k, present)?;
                }
                let d = CatalyticRodParams::default();
                let uncertainty = match (p.uncertainty_amplitude, p.uncertainty_omega) {
                    (None, None) => Uncertainty::None,
                    (Some(amplitude), Some(omega)) => Uncertainty::Sinusoid { amplitude, omega },
                    _ => {
                        return Err(Error::Config(
                            "params.uncertainty_amplitude and params.uncertainty_omega go together".into(),
                        ))
                    }
                };
                Model::CatalyticRod(CatalyticRodParams {
                    beta_t: p.beta_t.unwrap_or(d.beta_t),
                    beta_u: p.beta_u.unwrap_or(d.beta_u),
                    gamma_act: p.gamma_act.unwrap_or(d.gamma_act),
                    uncertainty,
                    length,
                })
            }
        };
        model.validate()?;
        Ok(model)
    }

    /// Step size, falling back to the model default: `0.4 dx^2 / nu` for
    /// Chafee-Infante, 0.25 for KSE and 0.006 for the rod.
    pub fn dt(&self) -> Result<f64> {
        if let Some(dt) = self.integrator.dt {
            return Ok(dt);
        }
        Ok(match self.model {
            ModelId::ChafeeInfante => {
                let nu = need(self.model, "nu", self.params.nu)?;
                let dx = self.build_grid()?.dx();
                0.4 * dx * dx / nu
            }
            ModelId::Kse => 0.25,
            ModelId::CatalyticRod => 0.006,
        })
    }

    pub fn schedule(&self) -> Result<Schedule> {
        let s = Schedule::new(self.dt()?, self.integrator.t_end)
            .with_stride(self.outputs.snapshot_stride)
            .with_uxx(self.outputs.record_uxx);
        s.validate()?;
        Ok(s)
    }

    pub fn control_config(&self) -> Result<Option<ControlConfig>> {
        self.control.as_ref().map(|c| c.to_control()).transpose()
    }

    /// The simulation described by the config (for twin runs: the truth
    /// run before spin-up, uncontrolled).
    pub fn build_simulation(&self) -> Result<Simulation> {
        let grid = self.build_grid()?;
        let model = self.build_model()?;
        let initial = initial_field(&self.initial, grid)?;
        let control = if self.twin.is_some() { None } else { self.control_config()? };
        let sim = Simulation {
            model,
            grid,
            initial,
            control,
            schedule: self.schedule()?,
        };
        sim.validate()?;
        Ok(sim)
    }

    /// Full validation, including everything `run` would reject up front.
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("name must not be empty".into()));
        }
        self.build_simulation()?;
        if let Some(c) = self.control_config()? {
            c.validate()?;
            let grid = self.build_grid()?;
            crate::interpolants::Interpolant::new(&c.spec, grid)?;
        }
        if let Some(t) = &self.twin {
            if self.control.is_none() {
                return Err(Error::Config("a twin experiment needs a [control] section".into()));
            }
            if !(t.spinup.is_finite() && t.spinup >= 0.0) {
                return Err(Error::Config(format!("twin.spinup must be >= 0, got {}", t.spinup)));
            }
            initial_field(&t.initial, self.build_grid()?)?;
        }
        if let Some([a, b]) = self.outputs.decay_window {
            if !(a < b) {
                return Err(Error::Config(format!("outputs.decay_window [{a}, {b}] is empty")));
            }
        }
        Ok(())
    }
}
