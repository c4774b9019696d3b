use std::io;

use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vector has zero norm")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("frame matrix has no columns")]
    EmptyMatrix,

    #[error("video {video_id}: {distinct} distinct frames, cannot form {k} clusters")]
    InsufficientFrames {
        video_id: String,
        distinct: usize,
        k: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("no ground truth for {0}")]
    MissingGroundTruth(String),

    #[error("group {0} has no members")]
    EmptyGroup(String),

    #[error("rank vectors are not aligned: {0}")]
    MisalignedVectors(String),

    #[error("rank vector is empty")]
    EmptyRanks,

    #[error("format error: {0}")]
    Format(String),

    #[error("file truncated: {0}")]
    TruncatedFile(String),

    #[error("duplicate id: {0:?}")]
    DuplicateId(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },

    #[error("unknown split: {0}")]
    UnknownSplit(String),

    #[error("split {0} selects no videos")]
    EmptySplit(String),

    #[error("malformed frame id {0:?}, expected videoId#frameIndex")]
    MalformedFrameId(String),

    #[error("no duration known for {0}")]
    MissingDuration(String),

    #[error("referential integrity: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for errors caused by inconsistent inputs or protocol violations
    /// rather than unreadable or malformed files.
    pub fn is_protocol(&self) -> bool {
        matches!(
            self,
            Error::InsufficientFrames { .. }
                | Error::MissingGroundTruth(_)
                | Error::EmptyGroup(_)
                | Error::MisalignedVectors(_)
                | Error::UnknownSplit(_)
                | Error::EmptySplit(_)
                | Error::MissingDuration(_)
                | Error::Integrity(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
