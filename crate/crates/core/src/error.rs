use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::model::NodeId;

/// A single failed scenario invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {}", join(.0))]
    InvalidScenario(Vec<Violation>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error("scheduler stalled at {time:.3}s with {pending} pending obligations")]
    Deadlock { time: f64, pending: usize },
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Protocol-level failures raised by node handlers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("source ttl must be at least 1, got {0}")]
    BadSourceTtl(u8),
    #[error("{0} cannot acknowledge: no discovery heard this epoch")]
    NoUpstream(NodeId),
    #[error("{node} has no distance to destination {dest}")]
    NoRoute { node: NodeId, dest: NodeId },
    #[error("{0} is not a group member")]
    NotMember(NodeId),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
