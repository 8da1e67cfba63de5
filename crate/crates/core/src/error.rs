use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite sample at {coords:?}")]
    NonFiniteSample { coords: Vec<f64> },

    #[error("delta must be 1/m for an integer m >= 2 (got {0})")]
    BadDelta(String),

    #[error("degenerate box: zero snapped measure")]
    DegenerateBox,

    #[error("grid specs differ between fields")]
    SpecMismatch,

    #[error("evaluation point {coords:?} violates the 2+delta margin")]
    MarginViolation { coords: Vec<f64> },

    #[error("face plane is not on the delta/2-shifted delta lattice")]
    UnquantizablePlane,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("weight must be strictly positive and finite ({0})")]
    DegenerateWeight(String),

    #[error("vector is identically zero")]
    ZeroVector,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("p = {p} not admissible here: requires p' integer or p = 1")]
    InadmissibleP { p: f64 },

    #[error("function has support outside 7Q_z")]
    SupportViolation,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
