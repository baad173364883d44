use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the fusion pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate concept name '{0}'")]
    DuplicateConcept(String),

    #[error("concept '{name}' has duplicate or empty labels")]
    BadLabels { name: String },

    #[error("unknown concept id {0}")]
    UnknownConcept(usize),

    #[error("duplicate relation id '{0}'")]
    DuplicateRelation(String),

    #[error("a relation between '{from_concept}' and '{to_concept}' already exists")]
    DuplicatePair {
        from_concept: String,
        to_concept: String,
    },

    #[error("relation '{id}': matrix is {rows}x{cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        id: String,
        rows: usize,
        cols: usize,
        want_rows: usize,
        want_cols: usize,
    },

    #[error("relation '{id}': entry ({row},{col}) = {value} is negative or non-finite")]
    BadEntry {
        id: String,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("cardinality must be at least 1")]
    ZeroCardinality,

    #[error("no rank assigned for concept '{0}'")]
    MissingRank(String),

    #[error("unknown relation id '{0}'")]
    UnknownRelation(String),

    #[error("tower '{tower}' referenced by device '{device}' is not in the tower set")]
    UnknownTower { device: String, tower: String },

    #[error("events for device '{device}' are not sorted by timestamp")]
    UnsortedEvents { device: String },

    #[error("municipality '{0}' is not a known label")]
    UnknownMunicipality(String),

    #[error("speed {0} km/h falls outside the configured speed-range scheme")]
    SpeedOutOfScheme(f64),

    #[error("speed-range scheme invalid: {0}")]
    BadSpeedScheme(String),

    #[error("empty domain name")]
    EmptyDomain,

    #[error("unknown mode name '{0}' in association data")]
    UnknownMode(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),

    #[error("graph validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("{path}: {detail}")]
    Malformed { path: PathBuf, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {detail}")]
    Parse { path: PathBuf, detail: String },
}

impl Error {
    /// Attach a path to a raw I/O error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            detail: detail.into(),
        }
    }

    /// True for errors caused by unreadable/missing/unparseable files, as
    /// opposed to semantically invalid data.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Parse { .. } | Error::Malformed { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
