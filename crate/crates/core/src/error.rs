use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid precision context: {0}")]
    InvalidContext(String),

    #[error("unknown constant `{0}`")]
    UnknownConstant(String),

    #[error("argument out of range: {0}")]
    Domain(String),

    #[error("unknown coefficient stream `{0}`")]
    UnknownStream(String),

    #[error("W transform is not defined on plain-form stream `{0}`")]
    PlainStream(String),

    #[error("stream `{0}` has a nonzero constant term")]
    NonzeroConstantTerm(String),

    #[error("series diverges: {0}")]
    Divergent(String),

    #[error("truncation certifies no digits: {0}")]
    Uncertified(String),

    #[error("non-admissible multi-index ({0})")]
    NotAdmissible(String),

    #[error("cannot parse multi-index `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("quadrature did not converge after {levels} levels (last difference {estimate})")]
    NoConvergence { levels: u32, estimate: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unknown integral `{0}`")]
    UnknownIntegral(String),

    #[error("bad parameters for `{id}`: {reason}")]
    BadParams { id: String, reason: String },

    #[error("unknown identity `{0}`")]
    UnknownIdentity(String),

    #[error("{side} side of `{id}` failed: {source}")]
    Side {
        id: String,
        side: &'static str,
        #[source]
        source: Box<Error>,
    },
}
