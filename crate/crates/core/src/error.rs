use std::path::PathBuf;

use thiserror::Error;

use crate::embedding::AlignmentTrace;
use crate::navgraph::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a documented precondition (shape, range, emptiness).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("unknown node id {0}")]
    UnknownNode(NodeId),

    #[error("no path from node {from} to node {to}")]
    NoPath { from: NodeId, to: NodeId },

    /// The shortest start-target path has fewer nodes than there are landmarks.
    #[error(
        "infeasible assignment: shortest path has {path_len} nodes but {landmarks} landmarks \
         need {landmarks} distinct path positions (landmarks 1..n-1 before the target, the target last)"
    )]
    InfeasibleAssignment { path_len: usize, landmarks: usize },

    #[error("optimization diverged at step {step}: loss is not finite")]
    Diverged { step: usize, trace: Box<AlignmentTrace> },

    #[error("world generation failed: {0}")]
    WorldGeneration(String),

    #[error(transparent)]
    Store(#[from] StoreError),
}

impl Error {
    /// True for errors caused by the caller's input rather than by a fault in
    /// the library or the environment.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::InvalidInput(_)
            | Error::DimensionMismatch { .. }
            | Error::ZeroVector
            | Error::UnknownNode(_)
            | Error::InfeasibleAssignment { .. } => true,
            Error::Store(e) => !matches!(e, StoreError::Io { .. }),
            Error::NoPath { .. } | Error::Diverged { .. } | Error::WorldGeneration(_) => false,
        }
    }
}

/// Graph directory persistence failures. Each corruption mode has its own
/// variant so callers can tell a truncated blob from a bad manifest.
#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest {path}: {reason}")]
    MalformedManifest { path: PathBuf, reason: String },

    #[error("unsupported format version {found} in {path} (expected {expected})")]
    VersionMismatch { path: PathBuf, found: u32, expected: u32 },

    #[error("node {node}: image blob {path} is missing")]
    MissingBlob { node: NodeId, path: PathBuf },

    #[error("node {node}: image blob {path} has bad magic")]
    BadMagic { node: NodeId, path: PathBuf },

    #[error("node {node}: image blob {path} is truncated ({actual} bytes, expected {expected})")]
    TruncatedBlob { node: NodeId, path: PathBuf, expected: usize, actual: usize },

    #[error("node {node}: image dimensions {found:?} differ from {expected:?}")]
    ImageDimensions { node: NodeId, expected: (u32, u32, u32), found: (u32, u32, u32) },

    #[error("graph validation failed: {0}")]
    Validation(String),
}
