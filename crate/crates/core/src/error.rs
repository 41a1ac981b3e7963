use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("unsupported dimension {0}; expected 2 or 3")]
    UnsupportedDimension(usize),
    #[error("negative argument {name} = {value}")]
    NegativeArgument { name: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate evaluation: {0}")]
    Degenerate(&'static str),
    #[error("quadrature did not converge (estimate {estimate:e}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },
    #[error("refinement level {0} exceeds the maximum of 10")]
    LevelOverflow(usize),
    #[error("degenerate element {0}")]
    DegenerateElement(usize),
    #[error("domain boundary is not smooth enough for charts")]
    NotSmoothBoundary,
    #[error("step h = {h} outside (0, {max})")]
    StepOutOfRange { h: f64, max: f64 },
    #[error("support violation: {0}")]
    SupportViolation(String),
    #[error("matrix lost positive definiteness at pivot {0}")]
    DefinitenessLost(usize),
    #[error("Newton did not converge within {iterations} iterations (residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },
    #[error("line search stalled at iteration {iteration}")]
    LineSearchStalled { iteration: usize },
    #[error("continuation stage {stage} (eps = {eps}, kappa = {kappa:?}) failed: {source}")]
    Stage {
        stage: usize,
        eps: f64,
        kappa: Option<f64>,
        #[source]
        source: Box<Error>,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("mesh format error at line {line}: {message}")]
    MeshFormat { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
