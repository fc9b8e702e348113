use splitlab_extprec::{ExtPrecError, PrecisionMode};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("{what} = {value} is outside the admissible range {range}")]
    Domain {
        what: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("trajectory blow-up: component {component} = {value:e} at t = {t}")]
    BlowUp {
        component: &'static str,
        value: f64,
        t: f64,
    },
    #[error("no crossing of the section within {max_steps} steps")]
    NoCrossing { max_steps: usize },
    #[error("precision {mode} is inadequate (unit {unit:e} > {limit:e}); rerun with --precision {required}")]
    PrecisionInadequate {
        mode: PrecisionMode,
        unit: f64,
        limit: f64,
        required: String,
    },
    #[error("seed point too close to the peak: x0 = {x0}; use x0 <= {suggested}")]
    SeedTooClose { x0: f64, suggested: f64 },
    #[error("no sign change of S on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("|z| = {z_abs} is too small for the inner series; need |z| >= {required}")]
    InnerTooClose { z_abs: f64, required: f64 },
    #[error("boundary accuracy {accuracy:e} exceeds {limit:e}; increase L")]
    BoundaryAccuracy { accuracy: f64, limit: f64 },
    #[error("fit refused: {usable} usable records, need at least {needed}")]
    TooFewRecords { usable: usize, needed: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    ExtPrec(#[from] ExtPrecError),
}

pub type Result<T> = std::result::Result<T, CoreError>;
