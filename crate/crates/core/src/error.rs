use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Parse(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("negative weight {value} for `{id}`")]
    NegativeWeight { id: String, value: f64 },

    #[error("probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("stage-II weight {w2} of set `{set}` exceeds lambda * w1 = {bound}")]
    Inflation { set: String, w2: f64, bound: f64 },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("simplex iteration limit ({0}) exceeded")]
    IterationLimit(usize),

    #[error("numerically singular basis")]
    SingularBasis,

    #[error("LP is unbounded: {0}")]
    Unbounded(String),

    #[error("no crossing pair in the delta grid: {0}")]
    NoCrossing(String),

    #[error("exceedance at the last grid point is {p_last}, not below {threshold}")]
    GridEnd { p_last: f64, threshold: f64 },

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("dual family missing: {0}")]
    MissingDuals(&'static str),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
