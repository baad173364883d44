//! File I/O: the labeled matrix CSV interchange format, raw input
//! readers, and TOML configuration.

pub mod config;
pub mod files;
pub mod matrix;

pub use config::{PipelineManifest, RunSettings};
pub use files::{ManifestEntry, MalformedRow};
pub use matrix::{read_matrix, write_matrix, LabeledMatrix};
