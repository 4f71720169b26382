use thiserror::Error;

/// Errors raised by grid construction, operators, integrators and scenarios.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field value at index {index} is not finite ({value})")]
    NonFiniteValue { index: usize, value: f64 },

    #[error("field length {found} does not match grid with {expected} points")]
    LengthMismatch { expected: usize, found: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("invalid interpolant: {0}")]
    InvalidInterpolant(String),

    #[error("node {node} at x = {x} lies outside its cell [{lo}, {hi}]")]
    NodeOutsideCell { node: usize, x: f64, lo: f64, hi: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("explicit diffusion step violates CFL bound: r = {ratio} (must be < 0.5)")]
    CflViolation { ratio: f64 },

    #[error(
        "explicit feedback is too stiff for the step: mu*dt = {product} exceeds {limit}; \
         reduce dt or fold Fourier-mode control into the linear symbol"
    )]
    FeedbackStiffness { product: f64, limit: f64 },

    #[error("exponential singularity: 1 + u = {value} <= 0 at index {index} (x = {x})")]
    Singularity { index: usize, x: f64, value: f64 },

    #[error("non-finite state produced at step {step}")]
    NonFinite { step: usize },

    #[error("reference trajectory covers [{start}, {end}] but t = {t} was requested")]
    ReferenceOutOfRange { t: f64, start: f64, end: f64 },

    #[error("interpolation constant c is missing; run estimate_interpolation_constant first")]
    MissingConstant,

    #[error("need at least {required} samples, found {found}")]
    InsufficientSamples { found: usize, required: usize },

    #[error("trajectory was flagged for blow-up at t = {t}")]
    BlownUp { t: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
