use thiserror::Error;

/// Errors raised by tree construction, checking and the textual front end.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unbound reference `{0}`")]
    UnboundRef(String),
    #[error("unknown operation `{0}`")]
    UnknownOp(String),
    #[error("operation `{op}` expects {expected} children, got {got}")]
    ArityMismatch {
        op: String,
        expected: String,
        got: usize,
    },
    #[error("duplicate operation `{0}` in signature")]
    DuplicateOp(String),
    #[error("invalid arity for `{0}`: finite arities must be at least 1")]
    InvalidArity(String),
    #[error("unguarded cycle through `{0}`: every cycle must pass through a node")]
    UnguardedCycle(String),
    #[error("leaf payload is not a suspended tree")]
    NonThunkLeaf,
    #[error("sort mismatch: {0}")]
    SortMismatch(String),
    #[error("argument {arg} is not admissible for function `{fun}`")]
    InadmissibleArgument { fun: String, arg: String },
    #[error("carrier of size {size} exceeds the cap of {cap}")]
    CarrierTooLarge { size: usize, cap: usize },
    #[error("value {0} is not an element of the carrier")]
    NotInCarrier(String),
    #[error("ill-typed candidate relation: {0}")]
    IllTypedCandidate(String),
    #[error("parse error at {line}:{col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("unknown observation `{0}`")]
    UnknownObservation(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
