//! Running scenarios and writing their artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{initial_field, ModelId, ScenarioConfig};
use super::overrides::{apply_override, resolve_key};
use crate::control::{
    check_ci_condition, check_kse_reference_condition, check_kse_zero_condition, recommended_actuators,
    ConditionVerdict,
};
use crate::diagnostics::{estimate_attractor_bound, fit_decay_rate, AttractorBound, DecayFit};
use crate::error::{Error, Result};
use crate::integrators::{run_simulation, run_twin, Schedule, Simulation, Trajectory, TwinResult};
use crate::interpolants::estimate_interpolation_constant;
use crate::models::Model;
use crate::parallel::{map_slice, Execution};

pub const NORMS_HEADER: &str = "t,l2,h1_semi,max_abs,mean,control_active";

/// Shortest round-trip decimal, in exponent form for very small or large
/// magnitudes.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub scenario: String,
    pub model: ModelId,
    pub blown_up: Option<f64>,
    pub steps: usize,
    pub t_final: f64,
    pub l2_initial: f64,
    pub l2_final: f64,
    pub max_abs_final: f64,
    pub mean_final: f64,
    pub t_on: Option<f64>,
    pub decay_window: (f64, f64),
    pub decay: Option<DecayFit>,
    pub onset_threshold: f64,
    pub onset_time: Option<f64>,
    pub recommended_actuators: usize,
    pub unstable_modes: usize,
    pub c_est: Option<f64>,
    pub r2: Option<AttractorBound>,
}

impl Summary {
    /// Negative fitted rate and a final L2 norm below 1e-3.
    pub fn stabilized(&self) -> bool {
        self.blown_up.is_none() && self.decay.is_some_and(|d| d.rate < 0.0) && self.l2_final < 1e-3
    }

    pub fn render(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map_or_else(|| "none".to_string(), fmt_f64)
        }
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "model = {}", self.model);
        let _ = writeln!(
            s,
            "status = {}",
            if self.blown_up.is_some() { "blown_up" } else { "completed" }
        );
        let _ = writeln!(s, "blown_up_at = {}", opt(self.blown_up));
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "t_final = {}", fmt_f64(self.t_final));
        let _ = writeln!(s, "l2_initial = {}", fmt_f64(self.l2_initial));
        let _ = writeln!(s, "l2_final = {}", fmt_f64(self.l2_final));
        let _ = writeln!(s, "max_abs_final = {}", fmt_f64(self.max_abs_final));
        let _ = writeln!(s, "mean_final = {}", fmt_f64(self.mean_final));
        let _ = writeln!(s, "control_t_on = {}", opt(self.t_on));
        let _ = writeln!(s, "decay_window = {},{}", fmt_f64(self.decay_window.0), fmt_f64(self.decay_window.1));
        let _ = writeln!(s, "decay_rate = {}", opt(self.decay.map(|d| d.rate)));
        let _ = writeln!(s, "decay_r_squared = {}", opt(self.decay.map(|d| d.r_squared)));
        let _ = writeln!(s, "decay_samples = {}", self.decay.map_or(0, |d| d.samples));
        let _ = writeln!(s, "onset_threshold = {}", fmt_f64(self.onset_threshold));
        let _ = writeln!(s, "onset_time = {}", opt(self.onset_time));
        let _ = writeln!(s, "stabilized = {}", self.stabilized());
        let _ = writeln!(s, "recommended_actuators = {}", self.recommended_actuators);
        let _ = writeln!(s, "unstable_modes = {}", self.unstable_modes);
        let _ = writeln!(s, "c_est = {}", opt(self.c_est));
        let _ = writeln!(s, "r2 = {}", opt(self.r2.map(|r| r.r2)));
        s
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ScenarioConfig,
    /// The run itself, or the error `u - u*` for twin experiments.
    pub trajectory: Trajectory,
    pub twin: Option<TwinResult>,
    pub verdicts: Vec<ConditionVerdict>,
    pub notes: Vec<String>,
    pub summary: Summary,
}

/// Empirical interpolation constant for the scenario's control spec.
pub fn estimate_c(cfg: &ScenarioConfig, exec: Execution) -> Result<f64> {
    let c = cfg
        .control
        .as_ref()
        .ok_or_else(|| Error::Config("estimate-c needs a [control] section".into()))?;
    let mut spec = c.spec()?;
    estimate_interpolation_constant(
        &mut spec,
        cfg.build_grid()?,
        cfg.outputs.c_samples,
        cfg.outputs.seed,
        exec,
    )
}

fn uncontrolled(cfg: &ScenarioConfig, t_end: f64, uxx: bool) -> Result<Simulation> {
    let mut sim = cfg.build_simulation()?;
    sim.control = None;
    sim.schedule = Schedule::new(sim.schedule.dt, t_end)
        .with_stride(sim.schedule.snapshot_stride)
        .with_uxx(uxx);
    Ok(sim)
}

/// R2 from an uncontrolled run of the scenario's model and initial state.
pub fn estimate_r2(cfg: &ScenarioConfig) -> Result<AttractorBound> {
    let sim = uncontrolled(cfg, cfg.integrator.t_end, true)?;
    let traj = run_simulation(&sim)?;
    let burn = cfg.outputs.r2_burn_in.unwrap_or(0.5 * cfg.integrator.t_end);
    estimate_attractor_bound(&traj, burn)
}

/// Condition checks that apply to the scenario. `r2` is used for twin runs.
pub fn check(cfg: &ScenarioConfig, r2: Option<f64>, exec: Execution) -> Result<(Vec<ConditionVerdict>, Vec<String>)> {
    let model = cfg.build_model()?;
    let mut verdicts = Vec::new();
    let mut notes = Vec::new();
    let rec = recommended_actuators(&model);
    notes.push(format!(
        "unstable modes: {}; recommended actuators: {} (bound {:.6})",
        rec.unstable_modes, rec.recommended, rec.bound
    ));
    for (label, v) in &rec.variants {
        notes.push(format!("  variant {label} = {v:.6}"));
    }
    let Some(ctl) = &cfg.control else {
        notes.push("no control configured".into());
        return Ok((verdicts, notes));
    };
    if ctl.n_actuators < rec.unstable_modes {
        notes.push(format!(
            "NC = {} is below the unstable mode count {}",
            ctl.n_actuators, rec.unstable_modes
        ));
    }
    let h = ctl.spec()?.h(cfg.length());
    match &model {
        Model::ChafeeInfante(p) => {
            verdicts.push(check_ci_condition(p.nu, p.alpha, p.length, ctl.n_actuators, ctl.mu));
        }
        Model::Kse(p) => {
            let c = match ctl.c {
                Some(c) => c,
                None => estimate_c(cfg, exec)?,
            };
            notes.push(format!("interpolation constant c = {c}"));
            verdicts.push(check_kse_zero_condition(p.nu, ctl.mu, h, Some(c))?);
            if let Some(r2) = r2 {
                verdicts.push(check_kse_reference_condition(p.nu, ctl.mu, h, Some(c), r2, p.length)?);
            }
        }
        Model::CatalyticRod(_) => notes.push("no analytic sufficient condition for the rod".into()),
    }
    Ok((verdicts, notes))
}

fn summarize(cfg: &ScenarioConfig, traj: &Trajectory, model: &Model) -> Summary {
    let d = &traj.diagnostics;
    let t_on = cfg.control.as_ref().filter(|c| c.mu > 0.0).map(|c| c.t_on);
    let window = match cfg.outputs.decay_window {
        Some([a, b]) => (a, b),
        None => (t_on.unwrap_or(0.0), cfg.integrator.t_end),
    };
    let rec = recommended_actuators(model);
    Summary {
        scenario: cfg.name.clone(),
        model: cfg.model,
        blown_up: traj.blown_up,
        steps: traj.steps,
        t_final: traj.final_time(),
        l2_initial: d.l2.first().copied().unwrap_or(f64::NAN),
        l2_final: d.l2.last().copied().unwrap_or(f64::NAN),
        max_abs_final: d.max_abs.last().copied().unwrap_or(f64::NAN),
        mean_final: d.mean.last().copied().unwrap_or(f64::NAN),
        t_on,
        decay_window: window,
        decay: fit_decay_rate(&d.t, &d.l2, window).ok(),
        onset_threshold: cfg.outputs.onset_threshold,
        onset_time: d.first_crossing(&d.max_abs, cfg.outputs.onset_threshold),
        recommended_actuators: rec.recommended,
        unstable_modes: rec.unstable_modes,
        c_est: cfg.control.as_ref().and_then(|c| c.c),
        r2: None,
    }
}

/// Run a scenario in memory.
pub fn execute(cfg: &ScenarioConfig, exec: Execution) -> Result<RunReport> {
    cfg.validate()?;
    let model = cfg.build_model()?;
    let (trajectory, twin, r2) = match &cfg.twin {
        None => (run_simulation(&cfg.build_simulation()?)?, None, None),
        Some(t) => {
            let mut truth = cfg.build_simulation()?;
            if t.spinup > 0.0 {
                let spin = run_simulation(&uncontrolled(cfg, t.spinup, false)?)?;
                if let Some(tb) = spin.blown_up {
                    return Err(Error::BlownUp { t: tb });
                }
                truth.initial = spin.final_state;
            }
            let nudged = initial_field(&t.initial, truth.grid)?;
            let control = cfg.control_config()?.expect("validated");
            let res = run_twin(&truth, &nudged, &control)?;
            let r2 = if cfg.model == ModelId::Kse {
                estimate_attractor_bound(&res.truth, 0.0).ok()
            } else {
                None
            };
            (res.error.clone(), Some(res), r2)
        }
    };
    let (verdicts, notes) = check(cfg, r2.map(|r| r.r2), exec)?;
    let mut summary = summarize(cfg, &trajectory, &model);
    summary.r2 = r2;
    if summary.c_est.is_none() {
        summary.c_est = notes
            .iter()
            .find_map(|n| n.strip_prefix("interpolation constant c = "))
            .and_then(|s| s.parse().ok());
    }
    Ok(RunReport {
        config: cfg.clone(),
        trajectory,
        twin,
        verdicts,
        notes,
        summary,
    })
}

pub fn norms_csv(traj: &Trajectory) -> String {
    let d = &traj.diagnostics;
    let mut s = String::with_capacity(64 * d.len());
    s.push_str(NORMS_HEADER);
    s.push('\n');
    for i in 0..d.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_f64(d.t[i]),
            fmt_f64(d.l2[i]),
            fmt_f64(d.h1_semi[i]),
            fmt_f64(d.max_abs[i]),
            fmt_f64(d.mean[i]),
            u8::from(d.control_active[i])
        );
    }
    s
}

pub fn snapshots_csv(traj: &Trajectory) -> String {
    let mut s = String::new();
    let Some(first) = traj.snapshots.first().or(Some(&traj.final_state)) else {
        return s;
    };
    let coords = first.grid().coords();
    s.push('x');
    for x in coords {
        let _ = write!(s, ",{}", fmt_f64(x));
    }
    s.push('\n');
    for (t, f) in traj.times.iter().zip(&traj.snapshots) {
        let _ = write!(s, "{}", fmt_f64(*t));
        for v in f.values() {
            let _ = write!(s, ",{}", fmt_f64(*v));
        }
        s.push('\n');
    }
    s
}

fn verdicts_text(report: &RunReport) -> String {
    let mut s = String::new();
    for v in &report.verdicts {
        let _ = write!(s, "{v}");
    }
    for n in &report.notes {
        let _ = writeln!(s, "{n}");
    }
    s
}

/// Write the artifacts of a finished run into `out`.
pub fn write_report(report: &RunReport, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.toml"), report.config.to_toml_string())?;
    fs::write(out.join("norms.csv"), norms_csv(&report.trajectory))?;
    if report.config.outputs.snapshots {
        fs::write(out.join("snapshots.csv"), snapshots_csv(&report.trajectory))?;
    }
    if let Some(t) = &report.twin {
        fs::write(out.join("truth_norms.csv"), norms_csv(&t.truth))?;
        fs::write(out.join("nudged_norms.csv"), norms_csv(&t.nudged))?;
    }
    fs::write(out.join("verdicts.txt"), verdicts_text(report))?;
    fs::write(out.join("summary.txt"), report.summary.render())?;
    Ok(())
}

/// Run and write. Blow-up is reported in the summary, not as an error.
pub fn run_scenario(cfg: &ScenarioConfig, out: &Path, exec: Execution) -> Result<RunReport> {
    let report = execute(cfg, exec)?;
    write_report(&report, out)?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub value: String,
    pub dir: PathBuf,
    pub outcome: std::result::Result<Summary, String>,
}

pub const AGGREGATE_HEADER: &str = "value,status,decay_rate,r_squared,l2_final,stabilized,error";

fn dir_name(key: &str, value: &str) -> String {
    let raw = format!("{key}={value}");
    raw.chars()
        .map(|c| match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '.' | '-' | '_' | '=' => c,
            _ => '_',
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One run per value, each in its own directory under `out`, plus
/// `aggregate.csv`. A failing run is recorded, not propagated.
pub fn sweep(base: &ScenarioConfig, key: &str, values: &[String], out: &Path, exec: Execution) -> Result<Vec<SweepEntry>> {
    let path = resolve_key(key)?;
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    fs::create_dir_all(out)?;
    // Runs are already parallel across values; keep each one sequential.
    let entries = map_slice(values, exec, |v| {
        let dir = out.join(dir_name(path, v));
        let outcome = apply_override(base, path, v)
            .and_then(|cfg| run_scenario(&cfg, &dir, Execution::Sequential))
            .map(|r| r.summary)
            .map_err(|e| e.to_string());
        if let Err(msg) = &outcome {
            let _ = fs::create_dir_all(&dir);
            let _ = fs::write(dir.join("error.txt"), format!("{msg}\n"));
        }
        SweepEntry {
            value: v.clone(),
            dir,
            outcome,
        }
    });
    let mut agg = String::new();
    agg.push_str(AGGREGATE_HEADER);
    agg.push('\n');
    for e in &entries {
        match &e.outcome {
            Ok(s) => {
                let status = if s.blown_up.is_some() { "blown_up" } else { "ok" };
                let rate = s.decay.map_or("none".into(), |d| fmt_f64(d.rate));
                let r2 = s.decay.map_or("none".into(), |d| fmt_f64(d.r_squared));
                let _ = writeln!(
                    agg,
                    "{},{status},{rate},{r2},{},{},",
                    csv_field(&e.value),
                    fmt_f64(s.l2_final),
                    s.stabilized()
                );
            }
            Err(msg) => {
                let _ = writeln!(agg, "{},failed,none,none,none,false,{}", csv_field(&e.value), csv_field(msg));
            }
        }
    }
    fs::write(out.join("aggregate.csv"), agg)?;
    Ok(entries)
}
