//! Time stepping and the simulation driver.

pub mod etdrk4;
pub mod explicit;
pub mod twin;

use num_complex::Complex64;

use crate::control::{ControlConfig, Feedback};
use crate::diagnostics::{NormProbe, RunDiagnostics};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Field, Grid1D};
use crate::interpolants::Family;
use crate::models::{ci_rhs_into, rod_rhs_into, KseOperator, KseParams, Model};

pub use etdrk4::{etdrk4_coefficients, etdrk4_step, EtdrkCoefficients, Etdrk4Workspace, RK4_STABILITY_LIMIT};
pub use explicit::{check_cfl, explicit_fd_step};
pub use twin::{run_twin, TwinResult};

/// States with `max |u|` above this are treated as blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e10;

/// Forward Euler real-axis bound used for the explicit feedback guard.
pub const EULER_STABILITY_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub dt: f64,
    pub t_end: f64,
    /// Store a full field every this many steps (and at the last step).
    pub snapshot_stride: usize,
    /// Record `||u_xx||` every step for the energy monitor.
    pub record_uxx: bool,
}

impl Schedule {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            snapshot_stride: 4,
            record_uxx: false,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_uxx(mut self, on: bool) -> Self {
        self.record_uxx = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParameter("snapshot stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        let r = self.t_end / self.dt;
        let k = r.round();
        if (r - k).abs() <= 1e-9 * r.max(1.0) {
            k as usize
        } else {
            r.ceil() as usize
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub model: Model,
    pub grid: Grid1D,
    pub initial: Field,
    pub control: Option<ControlConfig>,
    pub schedule: Schedule,
}

impl Simulation {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.schedule.validate()?;
        if self.grid.boundary() != self.model.boundary() {
            return Err(Error::InvalidGrid(format!(
                "{} needs a {:?} grid, got {:?}",
                self.model.name(),
                self.model.boundary(),
                self.grid.boundary()
            )));
        }
        if (self.grid.length() - self.model.length()).abs() > 1e-12 * self.model.length() {
            return Err(Error::InvalidGrid(format!(
                "grid length {} differs from model length {}",
                self.grid.length(),
                self.model.length()
            )));
        }
        if !self.initial.grid().same_shape(&self.grid) {
            return Err(Error::GridMismatch);
        }
        if let Some(c) = &self.control {
            c.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Snapshot times.
    pub times: Vec<f64>,
    pub snapshots: Vec<Field>,
    pub diagnostics: RunDiagnostics,
    /// Time of blow-up when the run was truncated.
    pub blown_up: Option<f64>,
    pub final_state: Field,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.diagnostics.t.last().copied().unwrap_or(0.0)
    }
}

struct Recorder {
    probe: NormProbe,
    record_uxx: bool,
    stride: usize,
    n_steps: usize,
    traj: Trajectory,
}

impl Recorder {
    fn new(grid: Grid1D, schedule: &Schedule, initial: &Field) -> Self {
        Self {
            probe: NormProbe::new(grid),
            record_uxx: schedule.record_uxx,
            stride: schedule.snapshot_stride,
            n_steps: schedule.n_steps(),
            traj: Trajectory {
                times: Vec::new(),
                snapshots: Vec::new(),
                diagnostics: RunDiagnostics::with_uxx(schedule.record_uxx),
                blown_up: None,
                final_state: initial.clone(),
                steps: 0,
            },
        }
    }

    /// Record state after `step` steps. Returns false when the state has
    /// blown up (the state is not stored in that case).
    fn record(&mut self, step: usize, t: f64, u: &[f64], active: bool) -> bool {
        let ok = u.iter().all(|v| v.is_finite() && v.abs() <= BLOWUP_THRESHOLD);
        if !ok {
            self.traj.blown_up = Some(t);
            return false;
        }
        let s = self.probe.sample(u, self.record_uxx);
        self.traj.diagnostics.push(t, &s, active);
        let field = Field::new(*self.traj.final_state.grid(), u.to_vec())
            .expect("state was checked finite");
        if step % self.stride == 0 || step == self.n_steps {
            self.traj.times.push(t);
            self.traj.snapshots.push(field.clone());
        }
        self.traj.final_state = field;
        self.traj.steps = step;
        true
    }
}

/// Run one deterministic simulation. Blow-up truncates the trajectory and
/// sets `blown_up`; configuration problems are errors.
pub fn run_simulation(sim: &Simulation) -> Result<Trajectory> {
    sim.validate()?;
    match &sim.model {
        Model::Kse(p) => run_kse(sim, p),
        Model::ChafeeInfante(_) | Model::CatalyticRod(_) => run_fd(sim),
    }
}

/// Modes that the folded Fourier feedback acts on: `1..=N`, plus the mean
/// mode unless the interpolant is mean-zero shifted.
pub(crate) fn folded_modes(cfg: &ControlConfig, n_modes: usize) -> std::ops::RangeInclusive<usize> {
    let first = if cfg.spec.mean_zero { 1 } else { 0 };
    first..=cfg.spec.n_actuators.min(n_modes - 1)
}

pub(crate) struct KseSetup {
    pub base: EtdrkCoefficients,
    pub folded: Option<EtdrkCoefficients>,
}

pub(crate) fn kse_setup(
    symbol: &[f64],
    dt: f64,
    control: Option<&ControlConfig>,
) -> Result<KseSetup> {
    let base = etdrk4_coefficients(symbol, dt, 32, 1.0)?;
    let mut folded = None;
    if let Some(cfg) = control.filter(|c| c.mu > 0.0) {
        if cfg.fold_into_symbol {
            if cfg.spec.family != Family::FourierModes {
                return Err(Error::Unsupported(format!(
                    "only the Fourier family can be folded into the symbol, got {}",
                    cfg.spec.family.name()
                )));
            }
            let mut s = symbol.to_vec();
            for m in folded_modes(cfg, s.len()) {
                s[m] -= cfg.mu;
            }
            folded = Some(etdrk4_coefficients(&s, dt, 32, 1.0)?);
        } else if cfg.mu * dt > RK4_STABILITY_LIMIT {
            return Err(Error::FeedbackStiffness {
                product: cfg.mu * dt,
                limit: RK4_STABILITY_LIMIT,
            });
        }
    }
    Ok(KseSetup { base, folded })
}

fn run_kse(sim: &Simulation, p: &KseParams) -> Result<Trajectory> {
    let grid = sim.grid;
    let n = grid.n_points();
    let dt = sim.schedule.dt;
    let mut op = KseOperator::new(*p, n)?;
    let setup = kse_setup(&op.symbol(), dt, sim.control.as_ref())?;
    let mut fb = sim
        .control
        .as_ref()
        .map(|c| Feedback::new(c.clone(), grid))
        .transpose()?;
    let fold = setup.folded.is_some();
    let n_modes = op.n_modes();
    let mut aux = KseSpectral::new(n, grid.length());
    let mut v = aux.spectral.forward_vec(sim.initial.values());
    let mut ws = Etdrk4Workspace::new(n_modes);
    let mut u = vec![0.0; n];
    let mut rec = Recorder::new(grid, &sim.schedule, &sim.initial);
    let active0 = fb.as_ref().is_some_and(|f| f.is_active(0.0));
    rec.record(0, 0.0, sim.initial.values(), active0);

    for step in 0..rec.n_steps {
        let t = step as f64 * dt;
        let active = fb.as_ref().is_some_and(|f| f.is_active(t));
        let coeffs = match (&setup.folded, active) {
            (Some(c), true) => c,
            _ => &setup.base,
        };
        let res = etdrk4_step(&mut v, coeffs, &mut ws, t, step + 1, |ts, x, out| {
            op.nonlinear(x, out);
            if let (true, Some(fb)) = (active, fb.as_mut()) {
                if fold {
                    fb.reference_forcing(ts, &mut aux.ctrl)?;
                } else {
                    aux.u.copy_from_slice(op.last_physical());
                    if p.dealias {
                        aux.spectral.inverse(x, &mut aux.u);
                    }
                    fb.apply(&aux.u, ts, &mut aux.ctrl)?;
                }
                aux.spectral.forward(&aux.ctrl, &mut aux.ctrl_hat);
                for (o, c) in out.iter_mut().zip(&aux.ctrl_hat) {
                    *o += c;
                }
            }
            Ok(())
        });
        let t_next = (step + 1) as f64 * dt;
        match res {
            Ok(()) => {}
            Err(Error::NonFinite { .. }) => {
                rec.traj.blown_up = Some(t_next);
                break;
            }
            Err(e) => return Err(e),
        }
        aux.spectral.inverse(&v, &mut u);
        let next_active = fb.as_ref().is_some_and(|f| f.is_active(t_next));
        if !rec.record(step + 1, t_next, &u, next_active) {
            break;
        }
    }
    Ok(rec.traj)
}

struct KseSpectral {
    spectral: crate::spectral::RealSpectral,
    u: Vec<f64>,
    ctrl: Vec<f64>,
    ctrl_hat: Vec<Complex64>,
}

impl KseSpectral {
    fn new(n: usize, length: f64) -> Self {
        let spectral = crate::spectral::RealSpectral::new(n, length);
        let m = spectral.n_modes();
        Self {
            spectral,
            u: vec![0.0; n],
            ctrl: vec![0.0; n],
            ctrl_hat: vec![Complex64::new(0.0, 0.0); m],
        }
    }
}

/// Diffusion coefficient and feedback gain multiplier of a finite-difference
/// model.
pub(crate) fn fd_coefficients(model: &Model) -> (f64, f64) {
    match model {
        Model::ChafeeInfante(p) => (p.nu, 1.0),
        Model::CatalyticRod(p) => (1.0, p.beta_u),
        Model::Kse(_) => unreachable!("KSE uses the spectral integrator"),
    }
}

pub(crate) fn fd_guards(model: &Model, grid: &Grid1D, dt: f64, control: Option<&ControlConfig>) -> Result<()> {
    let (diffusion, gain) = fd_coefficients(model);
    check_cfl(diffusion, dt, grid.dx())?;
    if let Some(c) = control {
        if c.fold_into_symbol {
            return Err(Error::Unsupported(
                "folding the feedback into a symbol needs the spectral integrator".into(),
            ));
        }
        let product = gain * c.mu * dt;
        if product > EULER_STABILITY_LIMIT {
            return Err(Error::FeedbackStiffness {
                product,
                limit: EULER_STABILITY_LIMIT,
            });
        }
    }
    Ok(())
}

/// Tendency of a finite-difference model with an already-evaluated feedback.
pub(crate) fn fd_rhs(
    model: &Model,
    grid: &Grid1D,
    u: &[f64],
    t: f64,
    control: Option<&[f64]>,
    out: &mut [f64],
) -> Result<()> {
    match model {
        Model::ChafeeInfante(p) => {
            ci_rhs_into(u, grid.dx(), p, control, out);
            Ok(())
        }
        Model::CatalyticRod(p) => rod_rhs_into(u, grid, p, t, control, out),
        Model::Kse(_) => unreachable!("KSE uses the spectral integrator"),
    }
}

fn run_fd(sim: &Simulation) -> Result<Trajectory> {
    let grid = sim.grid;
    let dt = sim.schedule.dt;
    fd_guards(&sim.model, &grid, dt, sim.control.as_ref())?;
    let mut fb = sim
        .control
        .as_ref()
        .map(|c| Feedback::new(c.clone(), grid))
        .transpose()?;
    let n = grid.n_points();
    let mut u = sim.initial.values().to_vec();
    if grid.boundary() == Boundary::Dirichlet {
        u[0] = 0.0;
        u[n - 1] = 0.0;
    }
    let mut scratch = vec![0.0; n];
    let mut ctrl = vec![0.0; n];
    let mut rec = Recorder::new(grid, &sim.schedule, &sim.initial);
    let active0 = fb.as_ref().is_some_and(|f| f.is_active(0.0));
    rec.record(0, 0.0, &u, active0);
    for step in 0..rec.n_steps {
        let t = step as f64 * dt;
        let active = fb.as_ref().is_some_and(|f| f.is_active(t));
        if let (true, Some(fb)) = (active, fb.as_mut()) {
            fb.apply(&u, t, &mut ctrl)?;
        }
        let c = active.then_some(ctrl.as_slice());
        explicit_fd_step(&mut u, dt, &mut scratch, |u, out| fd_rhs(&sim.model, &grid, u, t, c, out))?;
        let t_next = (step + 1) as f64 * dt;
        let next_active = fb.as_ref().is_some_and(|f| f.is_active(t_next));
        if !rec.record(step + 1, t_next, &u, next_active) {
            break;
        }
    }
    Ok(rec.traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interpolants::InterpolantSpec;
    use crate::models::ChafeeInfanteParams;
    use std::f64::consts::PI;

    fn kse_sim(nu: f64, u0: impl Fn(f64) -> f64, dt: f64, t_end: f64) -> Simulation {
        let grid = Grid1D::periodic(2.0 * PI, 128).unwrap();
        Simulation {
            model: Model::Kse(KseParams::new(nu)),
            grid,
            initial: Field::from_fn(grid, u0).unwrap(),
            control: None,
            schedule: Schedule::new(dt, t_end),
        }
    }

    #[test]
    fn linear_regime_mode_one_decay() {
        let sim = kse_sim(1.1, |x| 1e-3 * x.cos(), 0.05, 5.0);
        let traj = run_simulation(&sim).unwrap();
        assert_eq!(traj.steps, 100);
        let mut s = crate::spectral::RealSpectral::new(128, 2.0 * PI);
        let a0 = s.forward_vec(sim.initial.values())[1].norm();
        let a1 = s.forward_vec(traj.final_state.values())[1].norm();
        let expected = (-0.1f64 * 5.0).exp();
        assert!(((a1 / a0) - expected).abs() / expected < 1e-4);
    }

    #[test]
    fn blowup_is_flagged() {
        let grid = Grid1D::neumann(1.0, 21).unwrap();
        let sim = Simulation {
            model: Model::ChafeeInfante(ChafeeInfanteParams {
                nu: 1.0,
                alpha: 1.0,
                length: 1.0,
            }),
            grid,
            initial: Field::constant(grid, 1e6).unwrap(),
            control: None,
            schedule: Schedule::new(0.4 * grid.dx().powi(2), 1.0),
        };
        let traj = run_simulation(&sim).unwrap();
        assert!(traj.blown_up.is_some());
        assert!(traj.diagnostics.max_abs.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn explicit_feedback_stiffness_is_rejected() {
        let mut sim = kse_sim(4.0 / 15.0, |x| x.cos(), 0.25, 1.0);
        sim.control = Some(ControlConfig::new(20.0, InterpolantSpec::new(Family::FiniteVolume, 4)));
        assert!(matches!(run_simulation(&sim), Err(Error::FeedbackStiffness { .. })));
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let grid = Grid1D::neumann(1.0, 101).unwrap();
        let sim = Simulation {
            model: Model::ChafeeInfante(ChafeeInfanteParams {
                nu: 1.0,
                alpha: 100.0,
                length: 1.0,
            }),
            grid,
            initial: Field::zeros(grid),
            control: None,
            schedule: Schedule::new(0.51 * grid.dx().powi(2), 0.01),
        };
        assert!(matches!(run_simulation(&sim), Err(Error::CflViolation { .. })));
    }
}
