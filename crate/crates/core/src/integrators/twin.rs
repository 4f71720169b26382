//! Twin experiments: a truth run `u*` and a nudged copy integrated in
//! lockstep, so the feedback sees `u*` at every stage time exactly.

use num_complex::Complex64;

use super::{
    etdrk4_coefficients, etdrk4_step, explicit_fd_step, fd_guards, fd_rhs, folded_modes, kse_setup,
    Recorder, Simulation, Trajectory,
};
use crate::control::{ControlConfig, Feedback, Reference};
use crate::error::{Error, Result};
use crate::grid::{Boundary, Field};
use crate::integrators::Etdrk4Workspace;
use crate::models::{KseOperator, Model};
use crate::spectral::RealSpectral;

#[derive(Debug, Clone)]
pub struct TwinResult {
    pub truth: Trajectory,
    pub nudged: Trajectory,
    /// Norms of `w = u - u*`.
    pub error: Trajectory,
}

/// Integrate `truth` (which must be uncontrolled) together with a copy
/// started from `nudged_initial` and driven by `-mu I_h(u - u*)`. The
/// reference in `control` is ignored; the truth run is the reference.
pub fn run_twin(truth: &Simulation, nudged_initial: &Field, control: &ControlConfig) -> Result<TwinResult> {
    truth.validate()?;
    if truth.control.is_some() {
        return Err(Error::InvalidParameter("the truth run must be uncontrolled".into()));
    }
    if !nudged_initial.grid().same_shape(&truth.grid) {
        return Err(Error::GridMismatch);
    }
    let cfg = control.clone().with_reference(Reference::Zero);
    match &truth.model {
        Model::Kse(_) => twin_kse(truth, nudged_initial, cfg),
        _ => twin_fd(truth, nudged_initial, cfg),
    }
}

struct Recorders {
    truth: Recorder,
    nudged: Recorder,
    error: Recorder,
    w: Vec<f64>,
}

impl Recorders {
    fn new(sim: &Simulation, nudged_initial: &Field) -> Self {
        let zero = Field::zeros(sim.grid);
        Self {
            truth: Recorder::new(sim.grid, &sim.schedule, &sim.initial),
            nudged: Recorder::new(sim.grid, &sim.schedule, nudged_initial),
            error: Recorder::new(sim.grid, &sim.schedule, &zero),
            w: vec![0.0; sim.grid.n_points()],
        }
    }

    fn record(&mut self, step: usize, t: f64, ut: &[f64], un: &[f64], active: bool) -> bool {
        for ((w, a), b) in self.w.iter_mut().zip(un).zip(ut) {
            *w = a - b;
        }
        let a = self.truth.record(step, t, ut, false);
        let b = self.nudged.record(step, t, un, active);
        let c = self.error.record(step, t, &self.w, active);
        a && b && c
    }

    fn finish(self) -> TwinResult {
        let blown = self
            .truth
            .traj
            .blown_up
            .or(self.nudged.traj.blown_up)
            .or(self.error.traj.blown_up);
        let mut r = TwinResult {
            truth: self.truth.traj,
            nudged: self.nudged.traj,
            error: self.error.traj,
        };
        if blown.is_some() {
            r.truth.blown_up = r.truth.blown_up.or(blown);
            r.nudged.blown_up = r.nudged.blown_up.or(blown);
            r.error.blown_up = r.error.blown_up.or(blown);
        }
        r
    }
}

fn twin_kse(sim: &Simulation, nudged_initial: &Field, cfg: ControlConfig) -> Result<TwinResult> {
    let p = match &sim.model {
        Model::Kse(p) => *p,
        _ => unreachable!(),
    };
    let grid = sim.grid;
    let n = grid.n_points();
    let dt = sim.schedule.dt;
    let mut op = KseOperator::new(p, n)?;
    let m = op.n_modes();
    let symbol = op.symbol();
    let single = kse_setup(&symbol, dt, Some(&cfg))?;
    let joint_sym: Vec<f64> = symbol.iter().chain(symbol.iter()).copied().collect();
    let base = etdrk4_coefficients(&joint_sym, dt, 32, 1.0)?;
    let folded = match single.folded {
        Some(_) => {
            let mut s = joint_sym.clone();
            for k in folded_modes(&cfg, m) {
                s[m + k] -= cfg.mu;
            }
            Some(etdrk4_coefficients(&s, dt, 32, 1.0)?)
        }
        None => None,
    };
    let fold = folded.is_some();
    let mut fb = Feedback::new(cfg, grid)?;
    let mut spectral = RealSpectral::new(n, grid.length());
    let mut v: Vec<Complex64> = spectral.forward_vec(sim.initial.values());
    v.extend(spectral.forward_vec(nudged_initial.values()));
    let mut ws = Etdrk4Workspace::new(2 * m);
    let mut ut = vec![0.0; n];
    let mut un = vec![0.0; n];
    let mut diff = vec![0.0; n];
    let mut ctrl = vec![0.0; n];
    let mut ctrl_hat = vec![Complex64::new(0.0, 0.0); m];
    let mut rec = Recorders::new(sim, nudged_initial);
    let n_steps = sim.schedule.n_steps();
    rec.record(0, 0.0, sim.initial.values(), nudged_initial.values(), fb.is_active(0.0));

    for step in 0..n_steps {
        let t = step as f64 * dt;
        let active = fb.is_active(t);
        let coeffs = match (&folded, active) {
            (Some(c), true) => c,
            _ => &base,
        };
        let res = etdrk4_step(&mut v, coeffs, &mut ws, t, step + 1, |ts, x, out| {
            let (xt, xn) = x.split_at(m);
            let (ot, on) = out.split_at_mut(m);
            op.nonlinear(xt, ot);
            let truth_phys: &mut Vec<f64> = &mut diff;
            truth_phys.copy_from_slice(op.last_physical());
            op.nonlinear(xn, on);
            if active {
                if fold {
                    // +mu P_N u*
                    fb.apply(truth_phys, ts, &mut ctrl)?;
                    ctrl.iter_mut().for_each(|c| *c = -*c);
                } else {
                    for (d, a) in truth_phys.iter_mut().zip(op.last_physical()) {
                        *d = a - *d;
                    }
                    fb.apply(truth_phys, ts, &mut ctrl)?;
                }
                spectral.forward(&ctrl, &mut ctrl_hat);
                for (o, c) in on.iter_mut().zip(&ctrl_hat) {
                    *o += c;
                }
            }
            Ok(())
        });
        let t_next = (step + 1) as f64 * dt;
        match res {
            Ok(()) => {}
            Err(Error::NonFinite { .. }) => {
                rec.truth.traj.blown_up = Some(t_next);
                break;
            }
            Err(e) => return Err(e),
        }
        spectral.inverse(&v[..m], &mut ut);
        spectral.inverse(&v[m..], &mut un);
        if !rec.record(step + 1, t_next, &ut, &un, fb.is_active(t_next)) {
            break;
        }
    }
    Ok(rec.finish())
}

fn twin_fd(sim: &Simulation, nudged_initial: &Field, cfg: ControlConfig) -> Result<TwinResult> {
    let grid = sim.grid;
    let dt = sim.schedule.dt;
    fd_guards(&sim.model, &grid, dt, Some(&cfg))?;
    let mut fb = Feedback::new(cfg, grid)?;
    let n = grid.n_points();
    let mut ut = sim.initial.values().to_vec();
    let mut un = nudged_initial.values().to_vec();
    if grid.boundary() == Boundary::Dirichlet {
        for u in [&mut ut, &mut un] {
            u[0] = 0.0;
            u[n - 1] = 0.0;
        }
    }
    let mut scratch = vec![0.0; n];
    let mut diff = vec![0.0; n];
    let mut ctrl = vec![0.0; n];
    let mut rec = Recorders::new(sim, nudged_initial);
    rec.record(0, 0.0, &ut, &un, fb.is_active(0.0));
    for step in 0..sim.schedule.n_steps() {
        let t = step as f64 * dt;
        let active = fb.is_active(t);
        if active {
            for ((d, a), b) in diff.iter_mut().zip(&un).zip(&ut) {
                *d = a - b;
            }
            fb.apply(&diff, t, &mut ctrl)?;
        }
        let c = active.then_some(ctrl.as_slice());
        explicit_fd_step(&mut ut, dt, &mut scratch, |u, out| fd_rhs(&sim.model, &grid, u, t, None, out))?;
        explicit_fd_step(&mut un, dt, &mut scratch, |u, out| fd_rhs(&sim.model, &grid, u, t, c, out))?;
        let t_next = (step + 1) as f64 * dt;
        if !rec.record(step + 1, t_next, &ut, &un, fb.is_active(t_next)) {
            break;
        }
    }
    Ok(rec.finish())
}
