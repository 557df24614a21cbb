use thiserror::Error;

/// Unified error type for the whole engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown function `{0}`")]
    UnknownFunction(String),

    #[error("exponent not usable as an exact rational power: {0}")]
    NonRationalExponent(String),

    #[error("variable `{0}` has no assigned value")]
    UnassignedVar(String),

    #[error("singular numeric evaluation: {0}")]
    Singular(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("jet index out of supported range: {0}")]
    JetOrder(String),

    #[error("not an ODE right-hand side: {0}")]
    BadOde(String),

    #[error("point map is singular: {0}")]
    SingularMap(String),

    #[error("equation is not cubic in y': {0}")]
    NotCubic(String),

    #[error("generic-stratum invariants undefined on the cubic stratum (I = 0); use the projective pipeline")]
    CubicStratum,

    #[error("invariant frame degenerates at the requested locus: {0}")]
    DegenerateFrame(String),

    #[error("unknown invariant name `{0}`")]
    UnknownInvariant(String),

    #[error("curve invariant undefined: {0}")]
    SingularCurve(String),

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub fn other(msg: impl Into<String>) -> Self {
        Error::Other(msg.into())
    }
}
