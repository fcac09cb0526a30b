use thiserror::Error;

#[derive(Debug, Error)]
pub enum QpdError {
    #[error("qubit count mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("qubit count {n} outside supported range {min}..={max}")]
    UnsupportedQubitCount { n: usize, min: usize, max: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid chi matrix: {0}")]
    InvalidChi(String),

    #[error("invalid unitary ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "entanglement fidelity {fidelity} is below 2^-n = {threshold}: no sampling advantage over a classical wire cut"
    )]
    NoAdvantage { fidelity: f64, threshold: f64 },

    #[error("fidelity {0} exceeds 1")]
    FidelityAboveOne(f64),

    #[error("target (F={fidelity}, theta={theta}) infeasible after {attempts} draws: {detail}")]
    InfeasibleTarget {
        fidelity: f64,
        theta: f64,
        attempts: usize,
        detail: String,
    },

    #[error("commuting partition: {0}")]
    Partition(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, QpdError>;
