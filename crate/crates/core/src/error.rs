use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid network specification\n{0}")]
    Validation(ValidationReport),
    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    Range {
        what: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("{0}")]
    Variant(String),
    #[error("quadrature failed for channel {channel}: {source}")]
    Quadrature {
        channel: String,
        #[source]
        source: crate::quadrature::QuadratureError,
    },
    #[error("solver aborted at step {step}: non-finite {quantity}")]
    SolverAbort { step: usize, quantity: &'static str },
    #[error("propagator u(t, t0) is singular at t = {time} (condition estimate {condition:e})")]
    SingularPropagator { time: f64, condition: f64 },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("trace format: {0}")]
    Trace(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
