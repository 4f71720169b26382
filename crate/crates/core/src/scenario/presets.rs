//! Built-in scenarios for the published experiments plus the twin and
//! energy-monitor runs.

use super::config::{
    ControlSection, GridConfig, IntegratorConfig, ModelId, OutputsConfig, ParamsConfig, ScenarioConfig,
    TwinSection,
};
use crate::error::{Error, Result};
use crate::interpolants::Family;
use std::f64::consts::PI;

pub const PRESETS: &[&str] = &[
    "fig1",
    "fig2",
    "fig3",
    "fig4",
    "fig5",
    "fig6",
    "fig7",
    "fig8",
    "fig9",
    "fig9_nodal",
    "fig10",
    "twin",
    "energy",
];

fn outputs(stride: usize) -> OutputsConfig {
    OutputsConfig {
        snapshot_stride: stride,
        ..OutputsConfig::default()
    }
}

fn ci(name: &str) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        model: ModelId::ChafeeInfante,
        initial: "ci_cos3".into(),
        grid: GridConfig {
            n: Some(101),
            length: Some(1.0),
        },
        params: ParamsConfig {
            nu: Some(1.0),
            alpha: Some(100.0),
            ..ParamsConfig::default()
        },
        // dt defaults to 0.4 dx^2 / nu = 4e-5
        integrator: IntegratorConfig { dt: None, t_end: 1.0 },
        control: None,
        twin: None,
        outputs: outputs(125),
    }
}

fn kse(name: &str, nu: f64, initial: &str, dt: f64, t_end: f64, stride: usize) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        model: ModelId::Kse,
        initial: initial.into(),
        grid: GridConfig {
            n: Some(128),
            length: Some(2.0 * PI),
        },
        params: ParamsConfig {
            nu: Some(nu),
            ..ParamsConfig::default()
        },
        integrator: IntegratorConfig { dt: Some(dt), t_end },
        control: None,
        twin: None,
        outputs: outputs(stride),
    }
}

fn rod(name: &str, t_end: f64, stride: usize) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        model: ModelId::CatalyticRod,
        initial: "rod_sin2".into(),
        grid: GridConfig {
            n: Some(21),
            length: Some(PI),
        },
        params: ParamsConfig {
            beta_t: Some(50.0),
            beta_u: Some(2.0),
            gamma_act: Some(4.0),
            ..ParamsConfig::default()
        },
        integrator: IntegratorConfig { dt: Some(0.006), t_end },
        control: None,
        twin: None,
        outputs: outputs(stride),
    }
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let cfg = match name {
        "fig1" => ci("fig1"),
        "fig2" => {
            let mut c = ci("fig2");
            c.integrator.t_end = 0.2;
            c.outputs.snapshot_stride = 25;
            c.control = Some(ControlSection::new(Family::FiniteVolume, 10, 300.0));
            c
        }
        "fig3" => kse("fig3", 1.1, "kse_small", 0.25, 60.0, 4),
        "fig4" => kse("fig4", 4.0 / 15.0, "kse_small", 0.25, 80.0, 4),
        "fig5" => {
            let mut c = kse("fig5", 4.0 / 15.0, "kse_cos", 0.05, 80.0, 20);
            let mut s = ControlSection::new(Family::FourierModes, 4, 20.0);
            s.t_on = 40.0;
            s.fold_into_symbol = true;
            c.control = Some(s);
            c
        }
        "fig6" => {
            let mut c = kse("fig6", 4.0 / 20.0, "kse_multi", 0.05, 80.0, 20);
            let mut s = ControlSection::new(Family::FiniteVolume, 4, 20.0);
            s.mean_zero = true;
            c.control = Some(s);
            c
        }
        "fig7" => {
            let mut c = kse("fig7", 4.0 / 20.0, "kse_small", 0.05, 80.0, 20);
            let mut s = ControlSection::new(Family::Nodal, 4, 20.0);
            s.t_on = 40.0;
            c.control = Some(s);
            c
        }
        "fig8" => rod("fig8", 60.0, 100),
        "fig9" => {
            let mut c = rod("fig9", 6.0, 10);
            c.control = Some(ControlSection::new(Family::FiniteVolume, 1, 30.0));
            c
        }
        "fig9_nodal" => {
            let mut c = rod("fig9_nodal", 6.0, 10);
            c.control = Some(ControlSection::new(Family::Nodal, 1, 30.0));
            c
        }
        "fig10" => {
            let mut c = rod("fig10", 6.0, 10);
            c.initial = "1e-10 * sin(2 * x)".into();
            c.params.uncertainty_amplitude = Some(1.0);
            c.params.uncertainty_omega = Some(0.524);
            c.control = Some(ControlSection::new(Family::FiniteVolume, 1, 30.0));
            c
        }
        "twin" => {
            let mut c = kse("twin", 4.0 / 15.0, "kse_multi", 0.05, 40.0, 20);
            c.control = Some(ControlSection::new(Family::FiniteVolume, 32, 40.0));
            c.twin = Some(TwinSection {
                initial: "kse_cos".into(),
                spinup: 100.0,
            });
            c
        }
        "energy" => {
            let mut c = kse("energy", 0.5, "kse_cos", 0.05, 20.0, 20);
            c.control = Some(ControlSection::new(Family::FiniteVolume, 32, 16.0));
            c.outputs.record_uxx = true;
            c
        }
        other => {
            return Err(Error::Config(format!(
                "unknown scenario '{other}'; known: {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(cfg)
}
