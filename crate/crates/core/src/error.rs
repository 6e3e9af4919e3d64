use thiserror::Error;

/// Errors produced by grid construction, state preparation, propagation,
/// field extraction, verification, and scenario I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate domain: x_max ({x_max}) must exceed x_min ({x_min})")]
    DegenerateDomain { x_min: f64, x_max: f64 },

    #[error("too few grid points: got {got}, need at least {min}")]
    TooFewPoints { got: usize, min: usize },

    #[error("physical constant `{name}` must be positive, got {value}")]
    NonpositiveConstant { name: &'static str, value: f64 },

    #[error("cannot normalize a wave function with zero discrete norm")]
    ZeroNorm,

    #[error("sample count {got} does not match grid point count {expected}")]
    SampleCountMismatch { got: usize, expected: usize },

    #[error("packet width sigma must be positive, got {0}")]
    NonpositiveSigma(f64),

    #[error("tabulated potential has {got} samples but the grid has {expected} points")]
    TabulatedLengthMismatch { got: usize, expected: usize },

    #[error("malformed potential parameters: {0}")]
    MalformedPotential(String),

    #[error("time step must be positive, got {0}")]
    NonpositiveTimeStep(f64),

    #[error("scheme/boundary mismatch: {scheme} requires {required} boundary, got {got}")]
    SchemeBoundaryMismatch {
        scheme: &'static str,
        required: &'static str,
        got: &'static str,
    },

    #[error("tridiagonal solve breakdown at row {row} (pivot magnitude {pivot:.3e}); potential values are non-physical")]
    TridiagonalBreakdown { row: usize, pivot: f64 },

    #[error("eigensolver failed to converge for state {state} after {iterations} iterations (residual {residual:.3e})")]
    EigenConvergence {
        state: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("requested {requested} eigenstates but the grid supports at most {max}")]
    TooManyStates { requested: usize, max: usize },

    #[error("temporal phase step too large (|dphi| = {dphi:.6} >= pi at point {index}); reduce dt so that max|E|*dt/hbar stays below pi/2")]
    UnwrapGuard { index: usize, dphi: f64 },

    #[error("spectral derivatives require a periodic grid")]
    SpectralRequiresPeriodic,

    #[error("operator stencil order exceeds 2")]
    StencilOrderTooHigh,

    #[error("operator stencil coefficient length {got} does not match grid point count {expected}")]
    StencilLengthMismatch { got: usize, expected: usize },

    #[error("empty identity selection")]
    EmptyIdentities,

    #[error("history too short: need at least {min} snapshots, got {got}")]
    HistoryTooShort { got: usize, min: usize },

    #[error("snapshot index {index} out of the interior range 1..{max}")]
    SnapshotIndexOutOfRange { index: usize, max: usize },

    #[error("refinement history does not match the base scenario: {0}")]
    ScenarioMismatch(String),

    #[error("scenario parse error at line {line}: {message}")]
    ScenarioParse { line: usize, message: String },

    #[error("unknown configuration key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },

    #[error("configuration constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("missing required configuration key `{0}`")]
    MissingKey(&'static str),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed field table {path}: {message}")]
    FieldTable {
        path: std::path::PathBuf,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
