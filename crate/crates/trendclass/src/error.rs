use std::path::PathBuf;

/// Errors produced across the ingest / classify / pipeline surface.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate hashtag {hashtag:?} in manifest")]
    DuplicateHashtag { hashtag: String },

    #[error("observation slice [{start}, {end}] out of range for series of length {len}")]
    ObservationOutOfRange { start: i64, end: i64, len: usize },

    #[error("delay {minutes} min is not a multiple of the slide interval ({slide_minutes} min)")]
    DelayNotAligned { minutes: i64, slide_minutes: i64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("series length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("query is missing feature {0:?} required by the model")]
    MissingFeature(String),

    #[error("training data contains a single class; both classes are required")]
    SingleClass,

    #[error("class {label:?} has {count} instances, fewer than {folds} folds")]
    TooFewInstances {
        label: crate::ingest::Label,
        count: usize,
        folds: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
