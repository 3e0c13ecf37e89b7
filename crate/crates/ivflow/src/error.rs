//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("interpolation order must lie in 1..={max}, got {got}")]
    OrderOutOfRange { got: usize, max: usize },

    #[error("iterate {k} left the declared domain")]
    DomainEscape { k: i64 },

    #[error("orbit escaped the declared domain at step {k} ({} states kept)", partial.len())]
    OrbitEscape { k: i64, partial: Vec<Vec<f64>> },

    #[error("map family has no limit field; cannot evaluate at epsilon = 0")]
    NoLimitField,

    #[error("map family declares no reversor")]
    NoReversor,

    #[error("matrix is not a reversor for this map (defect {defect:.3e})")]
    NotAReversor { defect: f64 },

    #[error("dimension must be even for the symplectic pairing, got {0}")]
    OddDimension(usize),

    #[error("step size underflow at t = {t:.6e}")]
    StepUnderflow { t: f64, state: Vec<f64> },

    #[error("integration exceeded {max_steps} steps at t = {t:.6e}")]
    MaxStepsExceeded {
        max_steps: usize,
        t: f64,
        state: Vec<f64>,
    },

    #[error("quadrature did not converge in {levels} levels (best {best:.9e}, last diff {diff:.3e})")]
    QuadratureDiverged { levels: usize, best: f64, diff: f64 },

    #[error("integration path left the domain at s = {s:.6}")]
    SegmentEscape { s: f64 },

    #[error("no sign-change bracket for the section crossing")]
    NoBracket,

    #[error("crossing skipped: |grad(g).X| = {derivative:.3e} is below the transversality floor")]
    Tangency { derivative: f64 },

    #[error("orbit lies inside the section (|g| below tolerance at 3 consecutive iterates)")]
    InSectionOrbit,

    #[error("no level-set bracket found for psi = {psi}")]
    LevelsetBracket { psi: f64 },

    #[error("Newton iteration failed: {0}")]
    NewtonFailed(String),

    #[error("limit Hamiltonian is only defined for the built-in standard and Froeschle families")]
    UnsupportedLimitHamiltonian,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code buckets used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Invalid(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }
}
