use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("malformed flow: {0}")]
    MalformedFlow(String),

    #[error("malformed solution: {0}")]
    MalformedSolution(String),

    #[error("degenerate bipartition: {0}")]
    Degenerate(String),

    #[error("sparsifier routing failed: {0}")]
    SparsifierFailure(String),

    #[error("clustering phase stalled: {0}")]
    PhaseStall(String),

    #[error("outer loop stalled: {0}")]
    OuterStall(String),

    #[error("oracle budget exhausted: {0}")]
    Exhausted(String),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("io: {0}")]
    Io(String),

    #[error("{phase}: {source}")]
    InPhase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with the solver phase it came from.
    pub fn in_phase(self, phase: &'static str) -> Error {
        Error::InPhase {
            phase,
            source: Box::new(self),
        }
    }

    /// The innermost error, with phase annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::InPhase { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Infeasible(_) => 2,
            Error::PhaseStall(_) | Error::OuterStall(_) => 3,
            Error::Parse { .. } | Error::InvalidGraph(_) | Error::InvalidInstance(_) => 4,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
