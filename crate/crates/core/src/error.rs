use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A construction was requested for parameters where it is not available.
    #[error("parameter out of range: {0}")]
    ParameterRange(String),

    #[error("construction failed: {0}")]
    Construction(String),

    /// A certified inequality failed; `index` is the first violating grid point.
    #[error("certification of {what} failed at grid index {index} (t = {t}, margin = {margin})")]
    Certification {
        what: String,
        index: usize,
        t: f64,
        margin: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("admissibility violated: u = {value} > 0 on member node {node} of E")]
    Admissibility { node: usize, value: f64 },

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("sampling outside the field box: {0}")]
    OutOfBox(String),

    #[error("non-finite data: {0}")]
    NonFinite(String),

    #[error("root bracket failed at node {node}")]
    RootBracket { node: usize },

    /// Wraps a failure from one entry of a gamma sweep.
    #[error("gamma = {gamma}: {source}")]
    Sweep {
        gamma: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad input or configuration rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::ParameterRange(_)
                | Error::Shape(_)
                | Error::OutOfBox(_)
                | Error::Parse(_)
                | Error::Json(_)
                | Error::EmptySet(_)
                | Error::Admissibility { .. }
        )
    }
}
