//! Feedback term `-mu (I_h(u) - I_h(u*))`, activation schedule, actuator
//! counts and the sufficient stability conditions.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::integrators::Trajectory;
use crate::interpolants::{Interpolant, InterpolantSpec};
use crate::models::{count_unstable_modes, Model};

/// Target state `u*`.
#[derive(Debug, Clone, Default)]
pub enum Reference {
    #[default]
    Zero,
    Steady(Field),
    Trajectory(Arc<Trajectory>),
}

impl Reference {
    pub fn is_zero(&self) -> bool {
        matches!(self, Reference::Zero)
    }

    /// `u*(t)` written into `out`. Trajectories are interpolated linearly in
    /// time between stored snapshots.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        match self {
            Reference::Zero => {
                out.iter_mut().for_each(|v| *v = 0.0);
                Ok(())
            }
            Reference::Steady(f) => {
                out.copy_from_slice(f.values());
                Ok(())
            }
            Reference::Trajectory(traj) => {
                let times = &traj.times;
                let (start, end) = match (times.first(), times.last()) {
                    (Some(&a), Some(&b)) => (a, b),
                    _ => {
                        return Err(Error::ReferenceOutOfRange {
                            t,
                            start: f64::NAN,
                            end: f64::NAN,
                        })
                    }
                };
                let tol = 1e-9 * (1.0 + end.abs());
                if t < start - tol || t > end + tol {
                    return Err(Error::ReferenceOutOfRange { t, start, end });
                }
                let i = times.partition_point(|&s| s <= t + tol).saturating_sub(1);
                let a = traj.snapshots[i].values();
                if i + 1 >= times.len() || (t - times[i]).abs() <= tol {
                    out.copy_from_slice(a);
                } else {
                    let b = traj.snapshots[i + 1].values();
                    let s = (t - times[i]) / (times[i + 1] - times[i]);
                    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
                        *o = (1.0 - s) * x + s * y;
                    }
                }
                Ok(())
            }
        }
    }

    fn check_grid(&self, grid: &Grid1D) -> Result<()> {
        let ok = match self {
            Reference::Zero => true,
            Reference::Steady(f) => f.grid().same_shape(grid),
            Reference::Trajectory(t) => t.snapshots.iter().all(|f| f.grid().same_shape(grid)),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControlConfig {
    pub mu: f64,
    pub spec: InterpolantSpec,
    pub t_on: f64,
    pub reference: Reference,
    /// Fourier family only: treat `-mu P_N` as part of the linear symbol.
    pub fold_into_symbol: bool,
}

impl ControlConfig {
    pub fn new(mu: f64, spec: InterpolantSpec) -> Self {
        Self {
            mu,
            spec,
            t_on: 0.0,
            reference: Reference::Zero,
            fold_into_symbol: false,
        }
    }

    pub fn with_t_on(mut self, t_on: f64) -> Self {
        self.t_on = t_on;
        self
    }

    pub fn with_reference(mut self, r: Reference) -> Self {
        self.reference = r;
        self
    }

    pub fn folded(mut self, on: bool) -> Self {
        self.fold_into_symbol = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be >= 0, got {}", self.mu)));
        }
        if !(self.t_on.is_finite() && self.t_on >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_on must be >= 0, got {}",
                self.t_on
            )));
        }
        Ok(())
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.mu > 0.0 && t >= self.t_on - 1e-9
    }
}

/// Reusable evaluator of the feedback term on a fixed grid.
#[derive(Debug, Clone)]
pub struct Feedback {
    cfg: ControlConfig,
    interp: Interpolant,
    diff: Vec<f64>,
    reference: Vec<f64>,
}

impl Feedback {
    pub fn new(cfg: ControlConfig, grid: Grid1D) -> Result<Self> {
        cfg.validate()?;
        cfg.reference.check_grid(&grid)?;
        let interp = Interpolant::new(&cfg.spec, grid)?;
        let n = grid.n_points();
        Ok(Self {
            cfg,
            interp,
            diff: vec![0.0; n],
            reference: vec![0.0; n],
        })
    }

    pub fn config(&self) -> &ControlConfig {
        &self.cfg
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.cfg.is_active(t)
    }

    /// `out = -mu I_h(u - u*(t))`, or zero before activation.
    pub fn eval_into(&mut self, u: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        if self.cfg.is_active(t) {
            self.apply(u, t, out)
        } else {
            out.iter_mut().for_each(|v| *v = 0.0);
            Ok(())
        }
    }

    /// `out = -mu I_h(u - u*(t))` regardless of the schedule. Integrators
    /// decide activation once per step and call this at stage times.
    pub fn apply(&mut self, u: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        if self.cfg.reference.is_zero() {
            self.diff.copy_from_slice(u);
        } else {
            self.cfg.reference.eval_into(t, &mut self.reference)?;
            for ((d, a), b) in self.diff.iter_mut().zip(u).zip(&self.reference) {
                *d = a - b;
            }
        }
        self.interp.apply_into(&self.diff, out);
        let mu = self.cfg.mu;
        out.iter_mut().for_each(|v| *v *= -mu);
        Ok(())
    }

    /// `out = +mu I_h(u*(t))`: the forcing left over when `-mu I_h(u)` is
    /// folded into the linear symbol.
    pub fn reference_forcing(&mut self, t: f64, out: &mut [f64]) -> Result<()> {
        if self.cfg.reference.is_zero() {
            out.iter_mut().for_each(|v| *v = 0.0);
            return Ok(());
        }
        self.cfg.reference.eval_into(t, &mut self.reference)?;
        self.interp.apply_into(&self.reference, out);
        let mu = self.cfg.mu;
        out.iter_mut().for_each(|v| *v *= mu);
        Ok(())
    }
}

/// `-mu (I_h(u) - I_h(u*(t)))` as a field; zero before `t_on`.
pub fn feedback_term(u: &Field, cfg: &ControlConfig, t: f64) -> Result<Field> {
    let mut fb = Feedback::new(cfg.clone(), *u.grid())?;
    let mut out = vec![0.0; u.len()];
    fb.eval_into(u.values(), t, &mut out)?;
    Field::new(*u.grid(), out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorRecommendation {
    pub recommended: usize,
    pub unstable_modes: usize,
    /// Real-valued bound whose ceiling gives `recommended`.
    pub bound: f64,
    /// Alternative bounds reported alongside, with labels.
    pub variants: Vec<(String, f64)>,
}

pub fn recommended_actuators(model: &Model) -> ActuatorRecommendation {
    let unstable = count_unstable_modes(model);
    let (bound, variants) = match model {
        Model::ChafeeInfante(p) => {
            let l2a = p.length * p.length * p.alpha;
            let bound = (l2a / (PI * PI * p.nu)).sqrt();
            (
                bound,
                vec![
                    ("sqrt(L^2 alpha/(4 pi^2 nu))".to_string(), (l2a / (4.0 * PI * PI * p.nu)).sqrt()),
                    ("sqrt(L^2 alpha/nu)".to_string(), (l2a / p.nu).sqrt()),
                ],
            )
        }
        Model::Kse(p) => {
            let bound = p.length / (2.0 * PI) * (p.gamma / p.nu).sqrt();
            (bound, vec![("1/sqrt(nu)".to_string(), 1.0 / p.nu.sqrt())])
        }
        Model::CatalyticRod(_) => (unstable as f64, Vec::new()),
    };
    ActuatorRecommendation {
        recommended: (bound.ceil() as usize).max(unstable),
        unstable_modes: unstable,
        bound,
        variants,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Greater,
    GreaterEq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Greater => ">",
            Relation::GreaterEq => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubInequality {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub holds: bool,
    pub margin: f64,
}

impl SubInequality {
    fn new(label: &str, lhs: f64, relation: Relation, rhs: f64) -> Self {
        let holds = match relation {
            Relation::Greater => lhs > rhs,
            Relation::GreaterEq => lhs >= rhs,
        };
        Self {
            label: label.to_string(),
            lhs,
            rhs,
            relation,
            holds,
            margin: lhs - rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionVerdict {
    pub name: String,
    pub satisfied: bool,
    pub parts: Vec<SubInequality>,
    /// Smallest `lhs - rhs` over the parts.
    pub margin: f64,
    pub commentary: String,
}

impl ConditionVerdict {
    fn from_parts(name: &str, parts: Vec<SubInequality>, commentary: String) -> Self {
        let satisfied = parts.iter().all(|p| p.holds);
        let margin = parts.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min);
        Self {
            name: name.to_string(),
            satisfied,
            parts,
            margin,
            commentary,
        }
    }
}

impl fmt::Display for ConditionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {}",
            self.name,
            if self.satisfied { "SATISFIED" } else { "NOT SATISFIED" }
        )?;
        for p in &self.parts {
            writeln!(
                f,
                "  {:<28} {:.6e} {} {:.6e}  margin {:+.6e}  {}",
                p.label,
                p.lhs,
                p.relation,
                p.rhs,
                p.margin,
                if p.holds { "ok" } else { "fails" }
            )?;
        }
        if !self.commentary.is_empty() {
            writeln!(f, "  {}", self.commentary)?;
        }
        Ok(())
    }
}

/// Finite-volume stabilization of Chafee-Infante:
/// `mu >= nu (2 pi / h)^2 > alpha` with `h = L / N`.
pub fn check_ci_condition(nu: f64, alpha: f64, length: f64, n: usize, mu: f64) -> ConditionVerdict {
    let h = length / n as f64;
    let s = nu * (2.0 * PI / h).powi(2);
    ConditionVerdict::from_parts(
        "chafee_infante",
        vec![
            SubInequality::new("mu >= nu(2pi/h)^2", mu, Relation::GreaterEq, s),
            SubInequality::new("nu(2pi/h)^2 > alpha", s, Relation::Greater, alpha),
        ],
        format!("sufficient only; nu(2pi/h)^2 = {s:.6}"),
    )
}

/// Zero-state KSE stabilization: `mu > 4/nu` and `nu > mu c h^4`.
pub fn check_kse_zero_condition(nu: f64, mu: f64, h: f64, c: Option<f64>) -> Result<ConditionVerdict> {
    let c = c.ok_or(Error::MissingConstant)?;
    let mut v = ConditionVerdict::from_parts(
        "kse_zero",
        vec![
            SubInequality::new("mu > 4/nu", mu, Relation::Greater, 4.0 / nu),
            SubInequality::new("nu > mu c h^4", nu, Relation::Greater, mu * c * h.powi(4)),
        ],
        String::new(),
    );
    if !v.parts[1].holds && v.parts[0].holds {
        v.commentary = "raising mu cannot repair nu > mu c h^4; refine h instead".into();
    }
    Ok(v)
}

/// Nonzero-reference KSE synchronization: `mu > 4/nu`, `nu >= mu c h^4`
/// and `mu/8 >= sqrt(L / 2pi) R2`. A zero `R2` means the reference is the
/// zero state and the zero-state condition is returned.
pub fn check_kse_reference_condition(
    nu: f64,
    mu: f64,
    h: f64,
    c: Option<f64>,
    r2: f64,
    length: f64,
) -> Result<ConditionVerdict> {
    if r2 < 0.0 || !r2.is_finite() {
        return Err(Error::InvalidParameter(format!("R2 must be >= 0, got {r2}")));
    }
    if r2 == 0.0 {
        let mut v = check_kse_zero_condition(nu, mu, h, c)?;
        v.commentary = "R2 = 0: reference is the zero state".into();
        return Ok(v);
    }
    let c = c.ok_or(Error::MissingConstant)?;
    let bound = (length / (2.0 * PI)).sqrt() * r2;
    Ok(ConditionVerdict::from_parts(
        "kse_reference",
        vec![
            SubInequality::new("mu > 4/nu", mu, Relation::Greater, 4.0 / nu),
            SubInequality::new("nu >= mu c h^4", nu, Relation::GreaterEq, mu * c * h.powi(4)),
            SubInequality::new("mu/8 >= sqrt(L/2pi) R2", mu / 8.0, Relation::GreaterEq, bound),
        ],
        String::new(),
    ))
}
