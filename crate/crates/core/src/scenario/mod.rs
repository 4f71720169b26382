//! Scenario configs, presets, runs and sweeps.

mod config;
mod overrides;
mod presets;
mod run;

pub use config::{
    initial_field, ControlSection, GridConfig, IntegratorConfig, ModelId, OutputsConfig, ParamsConfig,
    ScenarioConfig, TwinSection, INITIAL_PRESETS,
};
pub use overrides::{apply_override, apply_overrides, resolve_key, KNOWN_KEYS};
pub use presets::{preset, PRESETS};
pub use run::{
    check, estimate_c, estimate_r2, execute, fmt_f64, norms_csv, run_scenario, snapshots_csv, sweep, write_report,
    RunReport, Summary, SweepEntry, AGGREGATE_HEADER, NORMS_HEADER,
};

/// Look up a preset by name, or load the file when `name` is a path.
pub fn load(name_or_path: &str) -> crate::Result<ScenarioConfig> {
    let p = std::path::Path::new(name_or_path);
    if PRESETS.contains(&name_or_path) {
        preset(name_or_path)
    } else if p.exists() {
        ScenarioConfig::load(p)
    } else {
        preset(name_or_path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            let text = cfg.to_toml_string();
            let back = ScenarioConfig::from_toml_str(&text).unwrap();
            assert_eq!(cfg, back, "{name}");
        }
    }

    #[test]
    fn override_forms() {
        let cfg = preset("fig1").unwrap();
        let same = apply_overrides(&cfg, &["alpha=100"]).unwrap();
        assert_eq!(cfg, same);
        let c = apply_overrides(&preset("fig4").unwrap(), &["nu=4/20", "params.nu=0.2"]).unwrap();
        assert_eq!(c.params.nu, Some(0.2));
        let c = apply_overrides(&preset("fig6").unwrap(), &["NC=8", "mu=40", "t_c=5"]).unwrap();
        let s = c.control.unwrap();
        assert_eq!((s.n_actuators, s.mu, s.t_on), (8, 40.0, 5.0));
        let c = apply_overrides(&cfg, &["initial=cos(2*x)"]).unwrap();
        assert_eq!(c.initial, "cos(2*x)");
        assert!(apply_overrides(&cfg, &["bogus=1"]).is_err());
        assert!(apply_overrides(&cfg, &["params.alpha"]).is_err());
    }

    #[test]
    fn unknown_field_reports_line() {
        let text = "name = \"x\"\nmodel = \"kse\"\ninitial = \"kse_cos\"\n[integrator]\nt_end = 1.0\nbogus = 3\n";
        let err = ScenarioConfig::from_toml_str(text).unwrap_err().to_string();
        assert!(err.contains("line 6"), "{err}");
    }

    #[test]
    fn params_for_other_models_are_rejected() {
        let mut cfg = preset("fig3").unwrap();
        cfg.params.alpha = Some(1.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn initial_presets_and_expressions() {
        let g = preset("fig3").unwrap().build_grid().unwrap();
        for p in INITIAL_PRESETS {
            initial_field(p, g).unwrap();
        }
        let f = initial_field("sin(x) + 2", g).unwrap();
        assert!((f.values()[0] - 2.0).abs() < 1e-15);
        assert!(initial_field("sin(y)", g).is_err());
    }
}
