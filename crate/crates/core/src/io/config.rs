//! TOML configuration: the pipeline manifest (where every input lives) and
//! the run settings (how to fit and report).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{DataConfiguration, RunConfig};
use crate::ingest::FilterParams;
use crate::trifactor::SolverConfig;

/// Paths to every pipeline input plus the output directory. Relative paths
/// are resolved against the manifest file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineManifest {
    pub relations: PathBuf,
    pub events: PathBuf,
    pub towers: PathBuf,
    pub usage: PathBuf,
    pub association: PathBuf,
    pub exclusion: PathBuf,
    pub stats: PathBuf,
    #[serde(default)]
    pub base_split: Option<PathBuf>,
    pub run_config: PathBuf,
    pub out_dir: PathBuf,
}

impl PipelineManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: PipelineManifest =
            toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        manifest.resolve_against(dir);
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).expect("manifest serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    fn resolve_against(&mut self, dir: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&p);
            }
        };
        resolve(&mut self.relations);
        resolve(&mut self.events);
        resolve(&mut self.towers);
        resolve(&mut self.usage);
        resolve(&mut self.association);
        resolve(&mut self.exclusion);
        resolve(&mut self.stats);
        if let Some(base) = &mut self.base_split {
            if base.is_relative() {
                *base = dir.join(&base);
            }
        }
        resolve(&mut self.run_config);
        resolve(&mut self.out_dir);
    }
}

/// Solver knobs as they appear in the run config; per-instance seeds come
/// from `base_seed`, not from here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub epsilon: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSettings {
            max_iterations: d.max_iterations,
            relative_tolerance: d.relative_tolerance,
            epsilon: d.epsilon,
        }
    }
}

/// The expert modulation factors of the projection step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorSettings {
    pub active_factor: f64,
    pub taxi_factor: f64,
}

impl Default for FactorSettings {
    fn default() -> Self {
        FactorSettings {
            active_factor: 0.975,
            taxi_factor: 1.09,
        }
    }
}

/// Ingest-stage knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestSettings {
    /// speed-range scheme file; empty means the built-in default scheme
    pub speed_scheme: Option<PathBuf>,
    pub entropy_drop_fraction: f64,
    /// total Dirichlet prior mass for the log-odds scoring
    pub alpha0: f64,
    /// multi-label public suffixes for domain unification ("co.uk" style)
    pub suffixes: Vec<String>,
    pub filter: FilterParams,
}

impl Default for IngestSettings {
    fn default() -> Self {
        IngestSettings {
            speed_scheme: None,
            entropy_drop_fraction: 0.10,
            alpha0: 1.0,
            suffixes: Vec::new(),
            filter: FilterParams::default(),
        }
    }
}

/// Validation-stage inputs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationSettings {
    pub macro_areas: Option<PathBuf>,
    /// external split to correlate against (the planted truth, in
    /// synthetic runs)
    pub reference_split: Option<PathBuf>,
}

/// Everything a run needs besides file locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunSettings {
    pub data_configuration: DataConfiguration,
    pub n_instances: usize,
    pub base_seed: u64,
    pub solver: SolverSettings,
    pub factors: FactorSettings,
    pub ingest: IngestSettings,
    pub validation: ValidationSettings,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            data_configuration: DataConfiguration::All,
            n_instances: 100,
            base_seed: 0,
            solver: SolverSettings::default(),
            factors: FactorSettings::default(),
            ingest: IngestSettings::default(),
            validation: ValidationSettings::default(),
        }
    }
}

impl RunSettings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut settings: RunSettings =
            toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = dir.join(&p);
                }
            }
        };
        resolve(&mut settings.ingest.speed_scheme);
        resolve(&mut settings.validation.macro_areas);
        resolve(&mut settings.validation.reference_split);
        Ok(settings)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).expect("run settings serialize");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            n_instances: self.n_instances,
            data_configuration: self.data_configuration,
            base_seed: self.base_seed,
            solver: SolverConfig {
                max_iterations: self.solver.max_iterations,
                relative_tolerance: self.solver.relative_tolerance,
                seed: 0,
                epsilon: self.solver.epsilon,
            },
        }
    }
}
