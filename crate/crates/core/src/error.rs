use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("directed cycle through {0}")]
    Cycle(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("evidence has probability zero")]
    ZeroEvidence,

    #[error("numerical underflow: evidence mass is structurally positive but evaluated to zero")]
    Underflow,

    /// Canonical exogenous cardinality `child_card^exponent` exceeds the guard.
    #[error("exogenous cardinality for {variable} is {} which exceeds the guard {guard}", describe_power(*child_card, *exponent))]
    CardinalityOverflow {
        variable: String,
        child_card: u64,
        /// Product of the parent cardinalities, `None` when it overflows u64 itself.
        exponent: Option<u64>,
        guard: u64,
    },

    #[error("missing prior for exogenous variable {0}")]
    MissingPrior(String),

    #[error("query undefined: {0}")]
    UndefinedQuery(String),

    #[error("model too large for enumeration: {size} joint exogenous states exceed the cap {cap}")]
    TooLarge { size: String, cap: u64 },

    #[error("EM degenerate: {0}")]
    EmDegenerate(String),

    #[error("no usable EM runs: none converged and none reached the iteration cap with finite likelihood")]
    NoConvergedRuns,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Cycle(_)
            | Error::Schema(_)
            | Error::InvalidModel(_)
            | Error::MissingPrior(_)
            | Error::Parse(_)
            | Error::Io { .. } => 2,
            Error::CardinalityOverflow { .. } | Error::TooLarge { .. } => 3,
            Error::ZeroEvidence
            | Error::Underflow
            | Error::UndefinedQuery(_)
            | Error::EmDegenerate(_)
            | Error::NoConvergedRuns
            | Error::Unsupported(_) => 4,
        }
    }
}

/// Renders `base^exponent` together with its decimal value when it fits in u128.
pub fn describe_power(base: u64, exponent: Option<u64>) -> String {
    match exponent {
        None => format!("{base}^(>2^64)"),
        Some(e) => {
            let exact = u32::try_from(e).ok().and_then(|e| (base as u128).checked_pow(e));
            let pretty = if base == 2 {
                format!("2^{e}")
            } else {
                format!("{base}^{e}")
            };
            match exact {
                Some(v) => format!("{pretty} = {v}"),
                None => pretty,
            }
        }
    }
}
