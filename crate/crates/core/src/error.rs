use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variants are grouped loosely by the subsystem that produces them; callers
/// in the CLI map them onto exit codes (configuration problems to 2, physics
/// or check failures to 1).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("algebra dimension {n} exceeds the supported maximum of {max}")]
    Capacity { n: usize, max: usize },

    #[error("invalid signature ({p},{q}): at least one generator is required")]
    EmptySignature { p: usize, q: usize },

    #[error("signature mismatch: ({0},{1}) vs ({2},{3})")]
    SignatureMismatch(usize, usize, usize, usize),

    #[error("grade {k} out of range for algebra of dimension {n}")]
    GradeOutOfRange { k: usize, n: usize },

    #[error("blade index {index} out of range for dimension {n}")]
    BladeOutOfRange { index: usize, n: usize },

    #[error("Clifford relation violated for generators ({i},{j}): residual {residual:e}")]
    RelationViolation { i: usize, j: usize, residual: f64 },

    #[error("blade images are linearly dependent: rank {rank} < {expected}")]
    LinearDependence { rank: usize, expected: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular or ill-conditioned (condition number {cond:e})")]
    Singular { cond: f64 },

    #[error("determinant {det} differs from 1 beyond tolerance")]
    NonUnitDeterminant { det: f64 },

    #[error("rotation plane requires two distinct spatial indices, got ({0},{1})")]
    DegeneratePlane(usize, usize),

    #[error("metric at {point:?} does not have signature ({p},{q})")]
    MetricSignature { point: Vec<f64>, p: usize, q: usize },

    #[error("metric is not symmetric at {point:?} (asymmetry {asym:e})")]
    MetricAsymmetric { point: Vec<f64>, asym: f64 },

    #[error("finite-difference step {h:e} is too small for the coordinate scale")]
    StepTooSmall { h: f64 },

    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("samples are not uniformly spaced")]
    NonUniformSamples,

    #[error("lattice point {index:?} lacks ghost data for the stencil")]
    MissingGhost { index: Vec<usize> },

    #[error("step {eps:e} is degenerate: {reason}")]
    DegenerateStep { eps: f64, reason: String },

    #[error("operator is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("stability guard violated: dt*|H| = {product:.4} >= 0.5; try dt <= {suggested_dt:e}")]
    Stability { product: f64, suggested_dt: f64 },

    #[error("mass must be positive for the two-component Klein-Gordon reduction")]
    ZeroMass,

    #[error("boundary must be periodic")]
    NonPeriodic,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
