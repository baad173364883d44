//! End-to-end pipeline drivers shared by the command-line interface and
//! the integration tests: ingest raw inputs into relation files, fit and
//! select a model, and emit the report tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::appusage::{self, mode_labels, UsageCounts};
use crate::error::{Error, Result};
use crate::fusion::{self, DataConfiguration, ModeComparison, TARGET_RELATION};
use crate::graph::{Concept, ConceptId, Relation, RelationGraph, Violation};
use crate::ingest::{self, SpeedRangeScheme, TowerSet};
use crate::io::config::{PipelineManifest, RunSettings};
use crate::io::files::{self, LenientRead, UsageRow};
use crate::io::matrix::{read_matrix, write_matrix};
use crate::priors::{self, ModeSplit};
use crate::stats::pearson;
use crate::trifactor::FactorSet;

/// Abort threshold for malformed rows in bulk inputs.
const MALFORMED_ABORT_FRACTION: f64 = 0.01;

fn enforce_malformed<T>(path: &Path, read: &LenientRead<T>, warnings: &mut Vec<String>) -> Result<()> {
    if read.malformed.is_empty() {
        return Ok(());
    }
    let shown: Vec<String> = read
        .malformed
        .iter()
        .take(5)
        .map(|m| format!("line {}: {}", m.line, m.detail))
        .collect();
    let fraction = read.malformed.len() as f64 / read.total_rows.max(1) as f64;
    if fraction > MALFORMED_ABORT_FRACTION {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            detail: format!(
                "{} of {} rows malformed ({:.2}% > 1%): {}",
                read.malformed.len(),
                read.total_rows,
                fraction * 100.0,
                shown.join("; ")
            ),
        });
    }
    warnings.push(format!(
        "{}: {} malformed rows skipped ({})",
        path.display(),
        read.malformed.len(),
        shown.join("; ")
    ));
    Ok(())
}

/// Load the relation graph for one data configuration from the manifest.
/// Concept labels come from the matrix files; the first relation that
/// mentions a concept fixes its labels, later ones must agree.
pub fn load_graph(
    manifest_path: &Path,
    configuration: DataConfiguration,
) -> Result<RelationGraph> {
    let entries = files::read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let dropped = configuration.dropped_relations();

    let mut concepts: Vec<Concept> = Vec::new();
    let mut concept_ids: BTreeMap<String, ConceptId> = BTreeMap::new();
    let mut relations: Vec<Relation> = Vec::new();
    let mut seen_ids: BTreeMap<String, ()> = BTreeMap::new();

    for entry in entries {
        if dropped.contains(&entry.id.as_str()) {
            continue;
        }
        if seen_ids.insert(entry.id.clone(), ()).is_some() {
            return Err(Error::parse(
                manifest_path,
                format!("duplicate relation id '{}'", entry.id),
            ));
        }
        let path = if entry.path.is_relative() {
            base.join(&entry.path)
        } else {
            entry.path.clone()
        };
        let matrix = read_matrix(&path)?;

        let mut intern = |name: &str, labels: &[String]| -> Result<ConceptId> {
            if let Some(&id) = concept_ids.get(name) {
                if concepts[id.0].labels != labels {
                    return Err(Error::Validation(vec![format!(
                        "{}: concept '{name}' labels disagree with an earlier relation \
                         ({} vs {} labels)",
                        path.display(),
                        labels.len(),
                        concepts[id.0].labels.len()
                    )]));
                }
                return Ok(id);
            }
            let id = ConceptId(concepts.len());
            concepts.push(Concept {
                id,
                name: name.to_string(),
                labels: labels.to_vec(),
            });
            concept_ids.insert(name.to_string(), id);
            Ok(id)
        };

        let source = intern(&entry.source_concept, &matrix.row_labels)?;
        let target = intern(&entry.target_concept, &matrix.col_labels)?;
        relations.push(Relation {
            id: entry.id,
            source,
            target,
            values: matrix.values,
            provenance: entry.provenance,
        });
    }
    Ok(RelationGraph::from_parts(concepts, relations))
}

/// Load and validate; violations become an error.
fn load_valid_graph(
    manifest_path: &Path,
    configuration: DataConfiguration,
) -> Result<RelationGraph> {
    let graph = load_graph(manifest_path, configuration)?;
    let violations = graph.validate(TARGET_RELATION);
    if !violations.is_empty() {
        return Err(Error::Validation(
            violations.iter().map(|v| v.to_string()).collect(),
        ));
    }
    Ok(graph)
}

/// Graph soundness check for the `validate-graph` command.
pub fn cmd_validate(manifest: &PipelineManifest, settings: &RunSettings) -> Result<Vec<Violation>> {
    let graph = load_graph(&manifest.relations, settings.data_configuration)?;
    Ok(graph.validate(TARGET_RELATION))
}

/// What the ingest stage did, for logging.
#[derive(Debug, Clone, Default)]
pub struct IngestSummary {
    pub events_total: usize,
    pub trips_extracted: usize,
    pub trips_filtered: usize,
    pub raw_domains: usize,
    pub unified_apps: usize,
    pub excluded_apps: usize,
    pub kept_apps: usize,
    pub warnings: Vec<String>,
}

/// Derive and write the mobility and app-usage relations (R05, R07, R08,
/// R09, R13) from the raw inputs.
pub fn cmd_ingest(manifest: &PipelineManifest, settings: &RunSettings) -> Result<IngestSummary> {
    let mut summary = IngestSummary::default();

    let towers_read = files::read_towers(&manifest.towers)?;
    enforce_malformed(&manifest.towers, &towers_read, &mut summary.warnings)?;
    let towers = TowerSet::new(towers_read.rows)?;

    let events_read = files::read_events(&manifest.events)?;
    enforce_malformed(&manifest.events, &events_read, &mut summary.warnings)?;
    let mut events = events_read.rows;
    summary.events_total = events.len();
    if events.is_empty() {
        summary
            .warnings
            .push(format!("{}: no events; mobility matrices will be zero", manifest.events.display()));
    }
    events.sort_by(|a, b| a.device.cmp(&b.device).then(a.timestamp.cmp(&b.timestamp)));
    events.dedup_by(|a, b| a.device == b.device && a.timestamp == b.timestamp);

    // municipality row order comes from the target relation file
    let entries = files::read_manifest(&manifest.relations)?;
    let base = manifest.relations.parent().unwrap_or_else(|| Path::new("."));
    let rel_path = |id: &str| -> Result<PathBuf> {
        entries
            .iter()
            .find(|e| e.id == id)
            .map(|e| {
                if e.path.is_relative() {
                    base.join(&e.path)
                } else {
                    e.path.clone()
                }
            })
            .ok_or_else(|| Error::UnknownRelation(id.to_string()))
    };
    let r01 = read_matrix(&rel_path(TARGET_RELATION)?)?;
    let municipalities = r01.row_labels;
    for m in towers.municipalities() {
        if !municipalities.contains(m) {
            return Err(Error::UnknownMunicipality(format!(
                "tower municipality '{m}' is not a row of {TARGET_RELATION}"
            )));
        }
    }

    let scheme = match &settings.ingest.speed_scheme {
        Some(path) => files::read_speed_scheme(path)?,
        None => SpeedRangeScheme::default(),
    };

    let trips = ingest::extract_trips(&events, &towers)?;
    summary.trips_extracted = trips.len();
    let trips = ingest::filter_trips(trips, &settings.ingest.filter);
    summary.trips_filtered = trips.len();

    let r05_counts = ingest::build_municipality_waypoint(&trips, &towers)?;
    let r05 = ingest::tfidf(&r05_counts);
    let (r07, r08) = ingest::build_speed_matrices(&trips, &towers, &scheme)?;

    // expand rows from tower-set municipality order to the target
    // relation's order (zero rows for tower-less municipalities)
    let expand = |m: &Array2<f64>| -> Array2<f64> {
        let mut out = Array2::zeros((municipalities.len(), m.ncols()));
        for (row, name) in municipalities.iter().enumerate() {
            if let Some(src) = towers.municipality_index(name) {
                out.row_mut(row).assign(&m.row(src));
            }
        }
        out
    };

    let tower_labels: Vec<String> = towers.towers().iter().map(|t| t.id.clone()).collect();
    let speed_labels = scheme.labels();
    write_matrix(&rel_path("R05")?, &municipalities, &tower_labels, &expand(&r05))?;
    write_matrix(&rel_path("R07")?, &municipalities, &speed_labels, &expand(&r07))?;
    write_matrix(&rel_path("R08")?, &tower_labels, &speed_labels, &r08)?;

    // --- app usage -------------------------------------------------------
    let usage_read = files::read_usage(&manifest.usage)?;
    enforce_malformed(&manifest.usage, &usage_read, &mut summary.warnings)?;
    let exclusions = files::read_exclusions(&manifest.exclusion)?;
    let excluded: std::collections::BTreeSet<String> = exclusions
        .iter()
        .map(|d| appusage::unify_domain(d, &settings.ingest.suffixes))
        .collect::<Result<_>>()?;

    let (usage, raw_domains, excluded_count) =
        aggregate_usage(&usage_read.rows, &towers, &excluded, &settings.ingest.suffixes)?;
    summary.raw_domains = raw_domains;
    summary.unified_apps = usage.apps.len();
    summary.excluded_apps = excluded_count;

    let kept_idx = appusage::entropy_filter(&usage, settings.ingest.entropy_drop_fraction)?;
    let kept_apps: Vec<String> = kept_idx.iter().map(|&i| usage.apps[i].clone()).collect();
    summary.kept_apps = kept_apps.len();
    let mut kept_counts = Array2::zeros((usage.towers.len(), kept_apps.len()));
    for (new_col, &old_col) in kept_idx.iter().enumerate() {
        kept_counts
            .column_mut(new_col)
            .assign(&usage.counts.column(old_col));
    }
    let kept = UsageCounts::new(usage.towers.clone(), kept_apps.clone(), kept_counts)?;

    let scores_raw = appusage::log_odds_zscores(&kept, settings.ingest.alpha0);
    let r09 = scores_raw.mapv(|z| z.max(0.0));
    write_matrix(&rel_path("R09")?, &tower_labels, &kept_apps, &r09)?;
    // the signed scores are kept for inspection next to the run outputs
    std::fs::create_dir_all(&manifest.out_dir).map_err(|e| Error::io(&manifest.out_dir, e))?;
    write_matrix(
        &manifest.out_dir.join("R09_unclipped.csv"),
        &tower_labels,
        &kept_apps,
        &scores_raw,
    )?;

    let associations_raw = files::read_associations(&manifest.association)?;
    let associations: Vec<(String, Vec<String>)> = associations_raw
        .into_iter()
        .map(|(app, modes)| {
            Ok((appusage::unify_domain(&app, &settings.ingest.suffixes)?, modes))
        })
        .collect::<Result<_>>()?;
    let r13 = appusage::build_mode_association(&associations, &kept_apps, &mode_labels())?;
    write_matrix(&rel_path("R13")?, &kept_apps, &mode_labels(), &r13)?;

    Ok(summary)
}

/// Collapse raw usage rows onto (tower x unified app) counts, dropping
/// excluded domains. Returns the counts, the raw domain count, and how
/// many raw rows were excluded.
fn aggregate_usage(
    rows: &[UsageRow],
    towers: &TowerSet,
    excluded: &std::collections::BTreeSet<String>,
    suffixes: &[String],
) -> Result<(UsageCounts, usize, usize)> {
    let mut raw_domains: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
    let mut excluded_count = 0usize;
    let mut cells: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
    for row in rows {
        raw_domains.insert(&row.domain);
        let tower = towers.index_of(&row.tower).ok_or_else(|| {
            Error::DegenerateInput(format!("usage row references unknown tower '{}'", row.tower))
        })?;
        let unified = appusage::unify_domain(&row.domain, suffixes)?;
        if excluded.contains(&unified) {
            excluded_count += 1;
            continue;
        }
        *cells.entry(unified).or_default().entry(tower).or_insert(0.0) += row.count;
    }
    let apps: Vec<String> = cells.keys().cloned().collect();
    let mut counts = Array2::zeros((towers.len(), apps.len()));
    for (col, app) in apps.iter().enumerate() {
        for (&tower, &count) in &cells[app] {
            counts[[tower, col]] = count;
        }
    }
    let tower_labels = towers.towers().iter().map(|t| t.id.clone()).collect();
    Ok((
        UsageCounts::new(tower_labels, apps, counts)?,
        raw_domains.len(),
        excluded_count,
    ))
}

/// Best-model metadata persisted next to the factor matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestModelMeta {
    pub data_configuration: DataConfiguration,
    pub seed: u64,
    pub global_error: f64,
    pub clamped_cells: usize,
}

/// What the fit stage produced.
#[derive(Debug, Clone)]
pub struct FitSummary {
    pub n_instances: usize,
    pub best_seed: u64,
    pub best_error: f64,
    pub converged: usize,
    pub instances_path: PathBuf,
}

/// Fit the configured number of instances, write the per-instance error
/// table, and persist the best model's factors and report.
pub fn cmd_fit(manifest: &PipelineManifest, settings: &RunSettings) -> Result<FitSummary> {
    let graph = load_valid_graph(&manifest.relations, settings.data_configuration)?;
    let filtered = graph.without_relations(settings.data_configuration.dropped_relations());
    let ranks = filtered.default_ranks();
    let config = settings.run_config();
    let results = fusion::run_instances(&graph, &ranks, &config)?;
    let best = fusion::select_best(&results)?;

    std::fs::create_dir_all(&manifest.out_dir).map_err(|e| Error::io(&manifest.out_dir, e))?;
    let instances_path = manifest.out_dir.join("instances.csv");
    {
        let mut w = csv::Writer::from_path(&instances_path)
            .map_err(|e| Error::parse(&instances_path, e.to_string()))?;
        w.write_record(["seed", "global_error", "converged", "iterations", "best"])
            .map_err(|e| Error::parse(&instances_path, e.to_string()))?;
        for r in &results {
            w.write_record([
                r.seed.to_string(),
                format!("{}", r.global_error),
                r.report.converged.to_string(),
                r.report.iterations_run.to_string(),
                (r.seed == best.seed).to_string(),
            ])
            .map_err(|e| Error::parse(&instances_path, e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(&instances_path, e))?;
    }

    // refit the winning seed to materialize its factors (instances carry
    // only reports and splits to keep the parallel run lean)
    let solver = crate::trifactor::SolverConfig {
        seed: best.seed,
        ..config.solver
    };
    let (factors, report) = crate::trifactor::fit(&filtered, &ranks, &solver)?;

    let best_dir = manifest.out_dir.join("best");
    std::fs::create_dir_all(&best_dir).map_err(|e| Error::io(&best_dir, e))?;
    save_factors(&best_dir, &filtered, &factors)?;

    let errors_path = best_dir.join("relation_errors.csv");
    let mut w = csv::Writer::from_path(&errors_path)
        .map_err(|e| Error::parse(&errors_path, e.to_string()))?;
    w.write_record(["relation", "normalized_error"])
        .map_err(|e| Error::parse(&errors_path, e.to_string()))?;
    for (id, err) in &report.per_relation_error {
        w.write_record([id.clone(), format!("{err}")])
            .map_err(|e| Error::parse(&errors_path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(&errors_path, e))?;

    let trace_path = best_dir.join("objective_trace.csv");
    let mut w = csv::Writer::from_path(&trace_path)
        .map_err(|e| Error::parse(&trace_path, e.to_string()))?;
    w.write_record(["iteration", "objective"])
        .map_err(|e| Error::parse(&trace_path, e.to_string()))?;
    for (i, obj) in report.objective_trace.iter().enumerate() {
        w.write_record([i.to_string(), format!("{obj}")])
            .map_err(|e| Error::parse(&trace_path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(&trace_path, e))?;

    let meta = BestModelMeta {
        data_configuration: settings.data_configuration,
        seed: best.seed,
        global_error: best.global_error,
        clamped_cells: best.clamped_cells,
    };
    let meta_text = toml::to_string(&meta).expect("meta serializes");
    std::fs::write(best_dir.join("meta.toml"), meta_text)
        .map_err(|e| Error::io(best_dir.join("meta.toml"), e))?;

    Ok(FitSummary {
        n_instances: results.len(),
        best_seed: best.seed,
        best_error: best.global_error,
        converged: results.iter().filter(|r| r.report.converged).count(),
        instances_path,
    })
}

fn latent_labels(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("k{i:02}")).collect()
}

fn save_factors(dir: &Path, graph: &RelationGraph, factors: &FactorSet) -> Result<()> {
    for (idx, concept) in graph.concepts().iter().enumerate() {
        let g = factors.factor(idx);
        write_matrix(
            &dir.join(format!("G_{}.csv", concept.name)),
            &concept.labels,
            &latent_labels(g.ncols()),
            g,
        )?;
    }
    for (idx, rel) in graph.relations().iter().enumerate() {
        let s = factors.backbone(idx);
        write_matrix(
            &dir.join(format!("S_{}.csv", rel.id)),
            &latent_labels(s.nrows()),
            &latent_labels(s.ncols()),
            s,
        )?;
    }
    Ok(())
}

fn load_factors(dir: &Path, graph: &RelationGraph) -> Result<FactorSet> {
    let mut gs = Vec::with_capacity(graph.n_concepts());
    for concept in graph.concepts() {
        let m = read_matrix(&dir.join(format!("G_{}.csv", concept.name)))?;
        gs.push(m.values);
    }
    let mut ss = Vec::with_capacity(graph.n_relations());
    for rel in graph.relations() {
        let m = read_matrix(&dir.join(format!("S_{}.csv", rel.id)))?;
        ss.push(m.values);
    }
    Ok(FactorSet::from_parts(gs, ss))
}

/// What the report stage produced.
#[derive(Debug, Clone)]
pub struct ReportSummary {
    pub citywide_shares: [f64; 4],
    pub clamped_cells: usize,
    pub validation: Vec<ModeComparison>,
    pub baseline_mass_transit_r: Option<f64>,
    pub report_dir: PathBuf,
}

/// Reconstruct the updated split from the persisted best model and write
/// every report table; correlate against the reference split when one is
/// configured.
pub fn cmd_report(manifest: &PipelineManifest, settings: &RunSettings) -> Result<ReportSummary> {
    let best_dir = manifest.out_dir.join("best");
    let meta_path = best_dir.join("meta.toml");
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: BestModelMeta =
        toml::from_str(&meta_text).map_err(|e| Error::parse(&meta_path, e.to_string()))?;

    let graph = load_valid_graph(&manifest.relations, meta.data_configuration)?;
    let filtered = graph.without_relations(meta.data_configuration.dropped_relations());
    let factors = load_factors(&best_dir, &filtered)?;

    let (split, clamped_cells) = fusion::updated_mode_split(&filtered, &factors)?;
    let (raw, raw_munis, raw_modes) = fusion::reconstruct_target(&filtered, &factors)?;

    files::write_mode_split(&manifest.out_dir.join("updated_split.csv"), &split)?;
    write_matrix(
        &manifest.out_dir.join("updated_split_unclamped.csv"),
        &raw_munis,
        &raw_modes,
        &raw,
    )?;

    // change against the prior, cell by cell
    let prior_rel = filtered
        .relation(TARGET_RELATION)
        .ok_or_else(|| Error::UnknownRelation(TARGET_RELATION.to_string()))?;
    let prior = ModeSplit::from_labeled(
        raw_munis.clone(),
        &raw_modes,
        prior_rel.values.clone(),
    )?;
    let change = split.counts() - prior.counts();
    write_matrix(
        &manifest.out_dir.join("change_vs_prior.csv"),
        split.municipalities(),
        &mode_labels(),
        &change,
    )?;

    // shares, clamped and unclamped
    let shares = fusion::mode_shares(&split)?;
    write_matrix(
        &manifest.out_dir.join("shares_municipality.csv"),
        split.municipalities(),
        &mode_labels(),
        &shares.per_municipality,
    )?;
    let unclamped_citywide: Vec<f64> = {
        let total: f64 = raw.sum();
        (0..4).map(|c| raw.column(c).sum() / total).collect()
    };
    let mut citywide = Array2::zeros((2, 4));
    for c in 0..4 {
        citywide[[0, c]] = shares.citywide[c];
        citywide[[1, c]] = unclamped_citywide[c];
    }
    write_matrix(
        &manifest.out_dir.join("shares_citywide.csv"),
        &["clamped".to_string(), "unclamped".to_string()],
        &mode_labels(),
        &citywide,
    )?;

    // macro-area totals of the validation mode
    let mut macro_lines = Vec::new();
    if let Some(mapping_path) = &settings.validation.macro_areas {
        let mapping = files::read_macro_areas(mapping_path)?;
        let totals = fusion::macro_totals(&split, &mapping, "mass-transit")?;
        let path = manifest.out_dir.join("macro_totals.csv");
        let mut w =
            csv::Writer::from_path(&path).map_err(|e| Error::parse(&path, e.to_string()))?;
        w.write_record(["macro_area", "mass_transit_trips"])
            .map_err(|e| Error::parse(&path, e.to_string()))?;
        for (area, total) in &totals {
            w.write_record([area.clone(), format!("{total}")])
                .map_err(|e| Error::parse(&path, e.to_string()))?;
            macro_lines.push(format!("{area}: {total:.1}"));
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }

    // external validation
    let mut validation = Vec::new();
    let mut baseline_mass_transit_r = None;
    let mut validation_lines = Vec::new();
    if let Some(reference_path) = &settings.validation.reference_split {
        let reference = files::read_mode_split(reference_path)?;
        validation = fusion::compare_configurations(&split, &reference)?;

        // the prior's mass-transit correlation, the "initial guess"
        // baseline the fused model is meant to improve on
        let aligned: Result<Vec<f64>> = split
            .municipalities()
            .iter()
            .map(|m| {
                reference
                    .row_of(m)
                    .map(|r| reference.counts()[[r, 0]])
                    .ok_or_else(|| Error::UnknownMunicipality(m.clone()))
            })
            .collect();
        let ref_mt = aligned?;
        let prior_mt = prior.mode_column("mass-transit")?;
        baseline_mass_transit_r = pearson(&prior_mt, &ref_mt).ok();

        let path = manifest.out_dir.join("validation.csv");
        let mut w =
            csv::Writer::from_path(&path).map_err(|e| Error::parse(&path, e.to_string()))?;
        w.write_record(["series", "r", "p_corrected"])
            .map_err(|e| Error::parse(&path, e.to_string()))?;
        for c in &validation {
            w.write_record([
                format!("model-{}", c.mode),
                c.r.map(|r| format!("{r}")).unwrap_or_default(),
                c.p_corrected.map(|p| format!("{p}")).unwrap_or_default(),
            ])
            .map_err(|e| Error::parse(&path, e.to_string()))?;
            validation_lines.push(format!(
                "model {} vs reference: r = {}, corrected p = {}",
                c.mode,
                c.r.map(|r| format!("{r:.4}")).unwrap_or_else(|| "undefined".into()),
                c.p_corrected
                    .map(|p| format!("{p:.4}"))
                    .unwrap_or_else(|| "undefined".into()),
            ));
        }
        w.write_record([
            "baseline-mass-transit".to_string(),
            baseline_mass_transit_r
                .map(|r| format!("{r}"))
                .unwrap_or_default(),
            String::new(),
        ])
        .map_err(|e| Error::parse(&path, e.to_string()))?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        if let Some(r) = baseline_mass_transit_r {
            validation_lines.push(format!("baseline (prior) mass-transit r = {r:.4}"));
        }
    } else {
        validation_lines.push("validation: skipped (no reference split supplied)".into());
    }

    // optional: how far the prior drifted from a population-only update
    if let Some(base_path) = &manifest.base_split {
        if base_path.exists() {
            let base = files::read_mode_split(base_path)?;
            let mut stats = files::read_stats(&manifest.stats)?;
            stats.active_factor = settings.factors.active_factor;
            stats.taxi_factor = settings.factors.taxi_factor;
            if let Ok(ratio) = priors::naive_ratio(&base, &prior, &stats) {
                validation_lines.push(format!(
                    "prior vs naive population-only projection ratio = {ratio:.4}"
                ));
            }
        }
    }

    let mut text = String::new();
    text.push_str(&format!(
        "best model: seed {}, global error {:.6}, configuration {}\n",
        meta.seed,
        meta.global_error,
        meta.data_configuration.as_str()
    ));
    text.push_str(&format!(
        "updated split: {} cells clamped to zero\n",
        clamped_cells
    ));
    text.push_str(&format!(
        "citywide shares (clamped): mass-transit {:.4}, motorised {:.4}, active {:.4}, taxi {:.4}\n",
        shares.citywide[0], shares.citywide[1], shares.citywide[2], shares.citywide[3]
    ));
    if !macro_lines.is_empty() {
        text.push_str("macro-area mass-transit totals:\n");
        for line in &macro_lines {
            text.push_str(&format!("  {line}\n"));
        }
    }
    for line in &validation_lines {
        text.push_str(&format!("{line}\n"));
    }
    std::fs::write(manifest.out_dir.join("validation.txt"), text)
        .map_err(|e| Error::io(manifest.out_dir.join("validation.txt"), e))?;

    Ok(ReportSummary {
        citywide_shares: shares.citywide,
        clamped_cells,
        validation,
        baseline_mass_transit_r,
        report_dir: manifest.out_dir.clone(),
    })
}
