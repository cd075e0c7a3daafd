use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported field order {0}; expected one of 2,3,4,5,7,8,9,11,13,16")]
    UnsupportedOrder(u32),

    #[error("{what} has {count} elements, above the cap of {cap}")]
    TooLarge {
        what: &'static str,
        count: String,
        cap: u64,
    },

    #[error("sum has {terms} terms, above the cap of {cap}")]
    TooManyTerms { terms: String, cap: u64 },

    #[error("subspaces live in different ambient spaces (F_{q1}^{n1} vs F_{q2}^{n2})")]
    AmbientMismatch { q1: u32, n1: usize, q2: u32, n2: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("linear map is singular")]
    SingularMap,

    #[error("decode system is degenerate: zero on the diagonal at {0}")]
    DegenerateSystem(usize),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn too_large(what: &'static str, count: impl ToString, cap: u64) -> Self {
        Error::TooLarge {
            what,
            count: count.to_string(),
            cap,
        }
    }
}
