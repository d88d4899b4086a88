use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("{what} out of range: {value} not in [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("envelope integration unstable: |dT| = {delta:.3} °C per substep on the {node} node (check {param})")]
    Unstable {
        node: &'static str,
        param: &'static str,
        delta: f64,
    },

    #[error("shape mismatch: expected {expected}, got {given}")]
    Shape { expected: String, given: String },

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("missing history: need {needed} lagged hours, have {available}")]
    MissingHistory { needed: usize, available: usize },

    #[error("closed-loop rollout diverged at hour {hour}: predicted indoor temperature {value:.3} °C outside [0, 50]")]
    RolloutDiverged { hour: usize, value: f64 },

    #[error("optimizer produced a non-finite objective at epoch {epoch}")]
    ObjectiveDiverged { epoch: usize },

    #[error("piecewise-linear reconstruction error {max_dev:.4} °C exceeds {tol} °C")]
    Reconstruction { max_dev: f64, tol: f64 },

    #[error("LP is infeasible")]
    Infeasible,

    #[error("LP is unbounded")]
    Unbounded,

    #[error("undefined: {0}")]
    Undefined(&'static str),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("online loop failed on day {day} during {stage}: {source}")]
    Online {
        day: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(what: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}
