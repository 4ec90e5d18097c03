use thiserror::Error;

/// Errors raised across the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("transmissivity {0} outside [0, 1]")]
    InvalidEta(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("truncation keeps only {trace:.6} of the state norm (need >= 0.99)")]
    ExcessiveTruncation { trace: f64 },

    #[error("POVM completeness residual {residual:.3e} exceeds 1e-4")]
    IncompletePovm { residual: f64 },

    #[error("phase {phase:.6} rad is {distance:.3e} rad from the nearest grid phase (bound {bound:.3e})")]
    PhaseGridTooCoarse {
        phase: f64,
        distance: f64,
        bound: f64,
    },

    #[error("fit diverged: {0}")]
    FitDiverged(String),

    #[error("underdetermined: {0}")]
    Underdetermined(String),

    #[error("insufficient points: need {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("frequency grids do not match: {0}")]
    GridMismatch(String),

    #[error("unphysical: {0}")]
    Unphysical(String),

    #[error("not converged after {iterations} iterations (last delta {delta:.3e})")]
    NotConverged { iterations: usize, delta: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Process exit code for the command-line front end: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ExcessiveTruncation { .. }
            | Error::IncompletePovm { .. }
            | Error::FitDiverged(_)
            | Error::Underdetermined(_)
            | Error::Unphysical(_)
            | Error::NotConverged { .. } => 3,
            _ => 2,
        }
    }

    /// Short machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::InvalidEta(_) => "InvalidEta",
            Error::DimensionMismatch(..) => "DimensionMismatch",
            Error::ExcessiveTruncation { .. } => "ExcessiveTruncation",
            Error::IncompletePovm { .. } => "IncompletePovm",
            Error::PhaseGridTooCoarse { .. } => "PhaseGridTooCoarse",
            Error::FitDiverged(_) => "FitDiverged",
            Error::Underdetermined(_) => "Underdetermined",
            Error::InsufficientPoints { .. } => "InsufficientPoints",
            Error::GridMismatch(_) => "GridMismatch",
            Error::Unphysical(_) => "Unphysical",
            Error::NotConverged { .. } => "NotConverged",
            Error::Parse { .. } => "Parse",
            Error::MissingInput(_) => "MissingInput",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Config(_) => "Config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
