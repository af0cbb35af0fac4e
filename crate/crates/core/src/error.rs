use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure in {context}: {detail}")]
    NumericalFailure { context: &'static str, detail: String },

    /// A point left the open interior; carries the signed boundary distance.
    #[error("domain violation: point at signed boundary distance {distance:e}")]
    DomainViolation { distance: f64 },

    /// The truncated distance fell below the underflow floor.
    #[error("overflow guard: boundary distance {distance:e} below floor")]
    OverflowGuard { distance: f64 },

    #[error("collapsed to a constant curve (energy {energy:e})")]
    Collapsed { energy: f64 },

    #[error("solver diverged after {iterations} iterations (gradient norm {grad_norm:e})")]
    Diverged { iterations: usize, grad_norm: f64 },

    #[error("iterates escaped the interior: {rejections} consecutive guarded steps")]
    Escaped { rejections: usize },

    #[error("continuation failed at epsilon = {epsilon:e}: {source}")]
    Continuation {
        epsilon: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("broken trend: potential integral increased over 3 consecutive steps ending at epsilon = {epsilon:e}")]
    BrokenTrend { epsilon: f64 },

    #[error("no bounces detected: force density never exceeds the threshold")]
    NoBounces,

    #[error("bounce clusters at grid cells {first} and {second} are closer than the merge gap")]
    MergeAmbiguity { first: usize, second: usize },

    #[error("assembly failure: straightness residual {residual:e} exceeds {limit:e}")]
    AssemblyFailure { residual: f64, limit: f64 },

    #[error("no candidate trajectories: {0}")]
    NoCandidates(String),

    #[error("incomplete report: {0}")]
    IncompleteReport(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(context: &'static str, detail: impl Into<String>) -> Self {
        Error::NumericalFailure {
            context,
            detail: detail.into(),
        }
    }

    /// True for the two barrier errors a line search should back off from.
    pub fn is_barrier(&self) -> bool {
        matches!(
            self,
            Error::DomainViolation { .. } | Error::OverflowGuard { .. }
        )
    }
}
