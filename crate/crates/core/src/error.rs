use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("angular frequency must be positive and finite, got {0}")]
    InvalidFrequency(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("root bracket [{lo}, {hi}] did not converge (residual {residual:e})")]
    ConvergenceFailure { lo: f64, hi: f64, residual: f64 },
    #[error("mode {mode} does not propagate at omega = {omega}")]
    ModeCutoff { mode: String, omega: f64 },
    #[error("surface force projects to zero on every mode")]
    DegenerateForce,
    #[error("domain too small: {0}")]
    DomainTooSmall(String),
    #[error("mesh would have {nodes} nodes, cap is {cap}")]
    MeshTooLarge { nodes: usize, cap: usize },
    #[error("coefficient is not positive ({value}) at ({x}, {y})")]
    SingularCoefficient { value: f64, x: f64, y: f64 },
    #[error("factorization failed: {reason} (condition estimate {condition_estimate:e})")]
    FactorizationFailure {
        reason: String,
        condition_estimate: f64,
    },
    #[error("fields are defined on different meshes")]
    MeshMismatch,
    #[error("non-positive Lame parameter (lambda = {lambda}, mu = {mu})")]
    SingularMaterial { lambda: f64, mu: f64 },
    #[error("wavenumber {k} is beyond the grid Nyquist limit {nyquist}")]
    Unresolvable { k: f64, nyquist: f64 },
    #[error("dispersion table has no {0} mode")]
    MissingMode(String),
    #[error("point ({x}, {y}) lies outside the field")]
    OutOfBounds { x: f64, y: f64 },
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("corrupt file: {0}")]
    CorruptFile(String),
    #[error("{dofs} degrees of freedom exceed the cap of {cap}")]
    DofCapExceeded { dofs: usize, cap: usize },
    #[error("io error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
