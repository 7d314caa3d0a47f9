use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("matrix is singular to working precision (cond = {cond:.3e})")]
    Singular { cond: f64 },
    #[error("matrix is not Hermitian positive definite: {0}")]
    NotPd(String),
    #[error("idempotents do not commute (residual {residual:.3e})")]
    NotCommuting { residual: f64 },
    #[error("matrix is not idempotent (residual {residual:.3e})")]
    NotIdempotent { residual: f64 },
    #[error("idempotent does not commute with the operator (residual {residual:.3e})")]
    NotInCommutant { residual: f64 },
    #[error("computed commutant is not closed under multiplication (residual {residual:.3e})")]
    NotAnAlgebra { residual: f64 },
    #[error("assembled dimension {dim} exceeds the limit of {limit}")]
    TooLarge { dim: usize, limit: usize },
    #[error("fiber {label} is not block diagonal under the supplied similarity (residue {residue:.3e})")]
    NotBlockDiagonalizable { label: String, residue: f64 },
    #[error("unknown example: {0}")]
    UnknownExample(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl Error {
    /// Stable upper-case name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "INVALID_INPUT",
            Error::IllConditioned(_) => "ILL_CONDITIONED",
            Error::Singular { .. } => "SINGULAR",
            Error::NotPd(_) => "NOT_PD",
            Error::NotCommuting { .. } => "NOT_COMMUTING",
            Error::NotIdempotent { .. } => "NOT_IDEMPOTENT",
            Error::NotInCommutant { .. } => "NOT_IN_COMMUTANT",
            Error::NotAnAlgebra { .. } => "NOT_AN_ALGEBRA",
            Error::TooLarge { .. } => "TOO_LARGE",
            Error::NotBlockDiagonalizable { .. } => "NOT_BLOCK_DIAGONALIZABLE",
            Error::UnknownExample(_) => "UNKNOWN_EXAMPLE",
            Error::BadParams(_) => "BAD_PARAMS",
            Error::MalformedCertificate(_) => "MALFORMED",
            Error::Serialization(_) => "MALFORMED",
        }
    }
}
