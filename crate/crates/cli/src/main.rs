use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nudging::scenario::{self, ScenarioConfig};
use nudging::Execution;

#[derive(Parser)]
#[command(name = "nudging", version, about = "Feedback control of dissipative 1-D PDEs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Source {
    /// Preset name (fig1 ... fig10, fig9_nodal, twin, energy).
    #[arg(value_name = "SCENARIO")]
    name: Option<String>,
    #[arg(long, conflicts_with = "name")]
    scenario: Option<String>,
    /// Scenario file in TOML.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["name", "scenario"])]
    config: Option<PathBuf>,
    /// `key=value`, repeatable. Keys may be dotted or bare.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, value_name = "N")]
    snapshots_stride: Option<usize>,
    /// Run without the thread pool.
    #[arg(long)]
    sequential: bool,
}

impl Source {
    fn load(&self) -> Result<ScenarioConfig> {
        let base = match (&self.config, self.name.as_ref().or(self.scenario.as_ref())) {
            (Some(p), _) => ScenarioConfig::load(p)?,
            (None, Some(n)) => scenario::load(n)?,
            (None, None) => bail!("give a scenario name, --scenario or --config"),
        };
        let mut cfg = scenario::apply_overrides(&base, &self.overrides)?;
        if let Some(s) = self.snapshots_stride {
            cfg = scenario::apply_override(&cfg, "outputs.snapshot_stride", &s.to_string())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write norms.csv, snapshots.csv, verdicts.txt, summary.txt.
    Run {
        #[command(flatten)]
        src: Source,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run one scenario per value of KEY.
    Sweep {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        key: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
    },
    /// Evaluate the sufficient stability conditions without running.
    Check {
        #[command(flatten)]
        src: Source,
        /// Attractor bound for the nonzero-reference check.
        #[arg(long)]
        r2: Option<f64>,
    },
    /// Estimate the interpolation constant c for the scenario's control.
    EstimateC {
        #[command(flatten)]
        src: Source,
    },
    /// Estimate R2 from an uncontrolled run of the scenario.
    EstimateR2 {
        #[command(flatten)]
        src: Source,
    },
    /// Print a scenario's config (after overrides).
    Show {
        #[command(flatten)]
        src: Source,
    },
    /// List presets.
    List,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { src, out } => {
            let cfg = src.load()?;
            let report = scenario::run_scenario(&cfg, &out, src.exec())
                .with_context(|| format!("running {}", cfg.name))?;
            print!("{}", report.summary.render());
            if let Some(t) = report.summary.blown_up {
                eprintln!("note: run blew up at t = {t}");
            }
        }
        Command::Sweep { src, key, values, out } => {
            let cfg = src.load()?;
            let entries = scenario::sweep(&cfg, &key, &values, &out, src.exec())?;
            for e in &entries {
                match &e.outcome {
                    Ok(s) => println!(
                        "{}={}: decay_rate {} stabilized {}",
                        key,
                        e.value,
                        s.decay.map_or("none".into(), |d| d.rate.to_string()),
                        s.stabilized()
                    ),
                    Err(msg) => println!("{}={}: failed: {msg}", key, e.value),
                }
            }
            println!("aggregate: {}", out.join("aggregate.csv").display());
        }
        Command::Check { src, r2 } => {
            let cfg = src.load()?;
            let (verdicts, notes) = scenario::check(&cfg, r2, src.exec())?;
            for v in verdicts {
                print!("{v}");
            }
            for n in notes {
                println!("{n}");
            }
        }
        Command::EstimateC { src } => {
            let cfg = src.load()?;
            let c = scenario::estimate_c(&cfg, src.exec())?;
            println!("c = {c}");
        }
        Command::EstimateR2 { src } => {
            let cfg = src.load()?;
            let b = scenario::estimate_r2(&cfg)?;
            println!("r2 = {}", b.r2);
            println!("drift = {}", b.drift);
            println!("window = {},{}", b.window.0, b.window.1);
        }
        Command::Show { src } => {
            print!("{}", src.load()?.to_toml_string());
        }
        Command::List => {
            for p in scenario::PRESETS {
                println!("{p}");
            }
        }
    }
    Ok(())
}
