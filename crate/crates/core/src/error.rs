use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid instance {instance}: {message}")]
    InvalidInstance { instance: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("label {label} out of range for node {node} (label count {label_count})")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        label_count: usize,
    },

    #[error("energy is not submodular: pairwise term {term} violates E(0,1) + E(1,0) >= E(0,0) + E(1,1)")]
    NotSubmodular { term: usize },

    #[error("search space of {assignments} assignments exceeds the cap of {cap}")]
    TooLarge { assignments: f64, cap: u64 },

    #[error("QP solver did not converge after {iterations} iterations (duality gap {gap:e})")]
    QpNotConverged { iterations: usize, gap: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
