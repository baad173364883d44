//! Data-fusion engine that updates area-level mode-of-transport trip
//! counts. A graph of relation matrices (official statistics, survey
//! priors, mobility traces, app usage, infrastructure) is collectively
//! tri-factorized, and the municipality x mode relation is reconstructed
//! from the shared latent space.

pub mod appusage;
pub mod error;
pub mod fusion;
pub mod graph;
pub mod ingest;
pub mod io;
mod linalg;
pub mod pipeline;
pub mod priors;
pub mod stats;
pub mod synth;
pub mod trifactor;

pub use error::{Error, Result};
pub use fusion::{DataConfiguration, InstanceResult, RunConfig, TARGET_RELATION};
pub use graph::{Concept, ConceptId, Provenance, RankAssignment, Relation, RelationGraph};
pub use priors::{ModeSplit, OfficialStats, MODES};
pub use trifactor::{FactorSet, FitReport, SolverConfig};
