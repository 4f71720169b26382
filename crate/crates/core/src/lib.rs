//! Finite-dimensional feedback control (nudging) of dissipative 1-D PDEs.

pub mod control;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod integrators;
pub mod interpolants;
pub mod models;
pub mod parallel;
pub mod scenario;
pub mod spectral;

pub use control::{ControlConfig, ConditionVerdict, Reference};
pub use diagnostics::RunDiagnostics;
pub use error::{Error, Result};
pub use grid::{Boundary, Differentiator, Field, Grid1D};
pub use integrators::{run_simulation, Schedule, Simulation, Trajectory};
pub use interpolants::{Family, InterpolantSpec, NodeRule};
pub use models::{CatalyticRodParams, ChafeeInfanteParams, KseParams, Model, Uncertainty};
pub use parallel::Execution;
