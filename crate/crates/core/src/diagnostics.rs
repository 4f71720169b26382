//! Norms, decay-rate fits, the time-averaged `||u_xx||` bound and energy
//! monitors.

use crate::error::{Error, Result};
use crate::grid::{Differentiator, Field, Grid1D};
use crate::integrators::Trajectory;
use crate::interpolants::l2;

pub fn l2_norm(u: &Field) -> f64 {
    l2(u.grid(), u.values())
}

pub fn h1_seminorm(u: &Field) -> f64 {
    let d = Differentiator::new(*u.grid()).first(u.values());
    l2(u.grid(), &d)
}

/// `sqrt((1/L^2) ||u||^2 + ||u_x||^2)`.
pub fn h1_norm(u: &Field) -> f64 {
    let length = u.grid().length();
    let a = l2_norm(u);
    let b = h1_seminorm(u);
    (a * a / (length * length) + b * b).sqrt()
}

pub fn uxx_norm(u: &Field) -> f64 {
    let d = Differentiator::new(*u.grid()).second(u.values());
    l2(u.grid(), &d)
}

/// Per-sample norms computed with a reusable differentiator.
#[derive(Debug, Clone)]
pub struct NormProbe {
    grid: Grid1D,
    diff: Differentiator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSample {
    pub l2: f64,
    pub h1_semi: f64,
    pub h1: f64,
    pub max_abs: f64,
    pub mean: f64,
    pub uxx: Option<f64>,
}

impl NormProbe {
    pub fn new(grid: Grid1D) -> Self {
        Self {
            grid,
            diff: Differentiator::new(grid),
        }
    }

    pub fn sample(&mut self, u: &[f64], with_uxx: bool) -> NormSample {
        let l2v = l2(&self.grid, u);
        let du = self.diff.first(u);
        let h1_semi = l2(&self.grid, &du);
        let length = self.grid.length();
        let uxx = with_uxx.then(|| {
            let d2 = self.diff.second(u);
            l2(&self.grid, &d2)
        });
        NormSample {
            l2: l2v,
            h1_semi,
            h1: (l2v * l2v / (length * length) + h1_semi * h1_semi).sqrt(),
            max_abs: u.iter().fold(0.0, |m, v| m.max(v.abs())),
            mean: self.grid.integrate(u) / length,
            uxx,
        }
    }
}

/// Time series recorded along a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunDiagnostics {
    pub t: Vec<f64>,
    pub l2: Vec<f64>,
    pub h1_semi: Vec<f64>,
    pub h1: Vec<f64>,
    pub max_abs: Vec<f64>,
    pub mean: Vec<f64>,
    pub control_active: Vec<bool>,
    /// `||u_xx||`, present when the energy monitor was requested.
    pub uxx: Option<Vec<f64>>,
    pub energy_monitor: Option<Vec<f64>>,
}

impl RunDiagnostics {
    pub fn with_uxx(enabled: bool) -> Self {
        Self {
            uxx: enabled.then(Vec::new),
            ..Self::default()
        }
    }

    pub fn push(&mut self, t: f64, s: &NormSample, control_active: bool) {
        self.t.push(t);
        self.l2.push(s.l2);
        self.h1_semi.push(s.h1_semi);
        self.h1.push(s.h1);
        self.max_abs.push(s.max_abs);
        self.mean.push(s.mean);
        self.control_active.push(control_active);
        if let (Some(v), Some(x)) = (self.uxx.as_mut(), s.uxx) {
            v.push(x);
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Value of a series at the last recorded time `<= t`.
    pub fn value_at(series: &[f64], times: &[f64], t: f64) -> Option<f64> {
        let idx = times.partition_point(|&s| s <= t + 1e-12);
        idx.checked_sub(1).map(|i| series[i])
    }

    /// First time at which `series` exceeds `threshold`.
    pub fn first_crossing(&self, series: &[f64], threshold: f64) -> Option<f64> {
        series
            .iter()
            .position(|&v| v > threshold)
            .map(|i| self.t[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub rate: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares slope of `ln(values)` against `t` over `window`. The window
/// is truncated just before the first non-positive value.
pub fn fit_decay_rate(t: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (a, b) = window;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&ti, &vi) in t.iter().zip(values) {
        if ti < a - 1e-12 || ti > b + 1e-12 {
            continue;
        }
        if vi <= 0.0 || !vi.is_finite() {
            break;
        }
        xs.push(ti);
        ys.push(vi.ln());
    }
    if xs.len() < 10 {
        return Err(Error::InsufficientSamples {
            found: xs.len(),
            required: 10,
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let rate = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - rate * (x - mx)).powi(2))
        .sum();
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * n {
        1.0
    } else {
        1.0 - ss_res / syy
    };
    Ok(DecayFit {
        rate,
        r_squared,
        samples: xs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttractorBound {
    /// `sqrt` of the time average of `||u_xx||^2` after burn-in.
    pub r2: f64,
    /// Relative difference between the last-quarter and full-window
    /// averages of `||u_xx||^2`.
    pub drift: f64,
    pub window: (f64, f64),
}

fn time_average(t: &[f64], v: &[f64]) -> f64 {
    if t.len() < 2 {
        return v.first().copied().unwrap_or(0.0);
    }
    let mut acc = 0.0;
    for i in 1..t.len() {
        acc += 0.5 * (v[i] + v[i - 1]) * (t[i] - t[i - 1]);
    }
    acc / (t[t.len() - 1] - t[0])
}

/// Time average of `||u_xx||^2` after `burn_in`, from the recorded series
/// when available and otherwise from the stored snapshots.
pub fn estimate_attractor_bound(traj: &Trajectory, burn_in: f64) -> Result<AttractorBound> {
    if let Some(t) = traj.blown_up {
        return Err(Error::BlownUp { t });
    }
    let (t, sq): (Vec<f64>, Vec<f64>) = match &traj.diagnostics.uxx {
        Some(uxx) => traj
            .diagnostics
            .t
            .iter()
            .zip(uxx)
            .filter(|(t, _)| **t >= burn_in - 1e-12)
            .map(|(t, v)| (*t, v * v))
            .unzip(),
        None => traj
            .times
            .iter()
            .zip(&traj.snapshots)
            .filter(|(t, _)| **t >= burn_in - 1e-12)
            .map(|(t, f)| (*t, uxx_norm(f).powi(2)))
            .unzip(),
    };
    if t.len() < 8 {
        return Err(Error::InsufficientSamples {
            found: t.len(),
            required: 8,
        });
    }
    let full = time_average(&t, &sq);
    let q = t.len() - t.len() / 4;
    let last = time_average(&t[q - 1..], &sq[q - 1..]);
    let drift = if full > 0.0 { (last - full).abs() / full } else { 0.0 };
    Ok(AttractorBound {
        r2: full.max(0.0).sqrt(),
        drift,
        window: (t[0], t[t.len() - 1]),
    })
}

/// Residual of `1/2 dE/dt + (3/4 nu - 1/4 mu c h^4)||u_xx||^2 - (1/nu - mu/4) E`
/// with `E = ||u||^2` and centered differences for `dE/dt` (one-sided at the
/// ends). Needs the `||u_xx||` series.
pub fn energy_inequality_monitor(
    diag: &RunDiagnostics,
    nu: f64,
    mu: f64,
    h: f64,
    c: f64,
) -> Result<Vec<f64>> {
    let uxx = diag
        .uxx
        .as_ref()
        .ok_or_else(|| Error::Unsupported("run was recorded without the u_xx series".into()))?;
    let n = diag.t.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { found: n, required: 2 });
    }
    let e: Vec<f64> = diag.l2.iter().map(|v| v * v).collect();
    let t = &diag.t;
    let a = 0.75 * nu - 0.25 * mu * c * h.powi(4);
    let b = 1.0 / nu - 0.25 * mu;
    Ok((0..n)
        .map(|i| {
            let de = if i == 0 {
                (e[1] - e[0]) / (t[1] - t[0])
            } else if i == n - 1 {
                (e[n - 1] - e[n - 2]) / (t[n - 1] - t[n - 2])
            } else {
                (e[i + 1] - e[i - 1]) / (t[i + 1] - t[i - 1])
            };
            0.5 * de + a * uxx[i] * uxx[i] - b * e[i]
        })
        .collect())
}

/// `||u(t)||^2 / (exp((1/nu - mu/4) (t - t0)) ||u(t0)||^2)` along the run;
/// values `<= 1` mean the exponential envelope holds.
pub fn gronwall_ratio(diag: &RunDiagnostics, nu: f64, mu: f64) -> Vec<f64> {
    let b = 1.0 / nu - 0.25 * mu;
    let (t0, e0) = match (diag.t.first(), diag.l2.first()) {
        (Some(&t0), Some(&l0)) => (t0, l0 * l0),
        _ => return Vec::new(),
    };
    diag.t
        .iter()
        .zip(&diag.l2)
        .map(|(&t, &l)| {
            let env = (b * (t - t0)).exp() * e0;
            if env > 0.0 {
                l * l / env
            } else {
                0.0
            }
        })
        .collect()
}
