//! Multi-seed model fitting, best-model selection by global error, the
//! updated mode split reconstruction, and the validation statistics.

use std::collections::BTreeMap;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{RankAssignment, RelationGraph};
use crate::priors::{ModeSplit, MODES};
use crate::stats::{bonferroni, pearson, pearson_pvalue};
use crate::trifactor::{self, FactorSet, FitReport, SolverConfig};

/// The update-target relation: the municipality x mode split being
/// reconstructed.
pub const TARGET_RELATION: &str = "R01";

/// Which relations participate in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataConfiguration {
    All,
    NoDpi,
    NoMobile,
}

impl DataConfiguration {
    /// Relation ids excluded under this configuration. The OSM-derived
    /// infrastructure x mode relation survives `NoMobile`; the
    /// waypoint x infrastructure join does not, because waypoints are
    /// mobile-derived.
    pub fn dropped_relations(&self) -> &'static [&'static str] {
        match self {
            DataConfiguration::All => &[],
            DataConfiguration::NoDpi => &["R09", "R13"],
            DataConfiguration::NoMobile => &["R09", "R13", "R05", "R07", "R08", "R10"],
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            DataConfiguration::All => "all",
            DataConfiguration::NoDpi => "no-dpi",
            DataConfiguration::NoMobile => "no-mobile",
        }
    }
}

impl std::str::FromStr for DataConfiguration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(DataConfiguration::All),
            "no-dpi" => Ok(DataConfiguration::NoDpi),
            "no-mobile" => Ok(DataConfiguration::NoMobile),
            other => Err(Error::DegenerateInput(format!(
                "unknown data configuration '{other}'"
            ))),
        }
    }
}

/// A full multi-instance run description.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunConfig {
    pub n_instances: usize,
    pub data_configuration: DataConfiguration,
    pub base_seed: u64,
    pub solver: SolverConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_instances: 100,
            data_configuration: DataConfiguration::All,
            base_seed: 0,
            solver: SolverConfig::default(),
        }
    }
}

/// One fitted instance: its seed, fit report, global error, and the
/// reconstructed mode split (negatives clamped, with the clamp count).
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceResult {
    pub seed: u64,
    pub report: FitReport,
    pub global_error: f64,
    pub updated_split: ModeSplit,
    pub clamped_cells: usize,
}

/// Fit `n_instances` models over the configuration-filtered graph, one
/// seed per instance (`base_seed + i`), in parallel. Results are ordered
/// by seed and bit-reproducible for a fixed config.
pub fn run_instances(
    graph: &RelationGraph,
    ranks: &RankAssignment,
    config: &RunConfig,
) -> Result<Vec<InstanceResult>> {
    let filtered = graph.without_relations(config.data_configuration.dropped_relations());
    if filtered.n_relations() == 0 {
        return Err(Error::DegenerateInput(
            "run_instances: no relations left after configuration filtering".into(),
        ));
    }
    let violations = filtered.validate(TARGET_RELATION);
    if !violations.is_empty() {
        return Err(Error::Validation(
            violations.iter().map(|v| v.to_string()).collect(),
        ));
    }

    (0..config.n_instances)
        .into_par_iter()
        .map(|i| {
            let solver = SolverConfig {
                seed: config.base_seed.wrapping_add(i as u64),
                ..config.solver
            };
            let (factors, report) = trifactor::fit(&filtered, ranks, &solver)?;
            let e = global_error(&report, TARGET_RELATION)?;
            let (updated_split, clamped_cells) = updated_mode_split(&filtered, &factors)?;
            Ok(InstanceResult {
                seed: solver.seed,
                report,
                global_error: e,
                updated_split,
                clamped_cells,
            })
        })
        .collect()
}

/// Geometric mean of per-relation normalized errors, excluding the update
/// target (its deviation is the modal-split change, not an error). Zero
/// errors are floored at 1e-15 before the log.
pub fn global_error(report: &FitReport, excluded: &str) -> Result<f64> {
    let mut log_sum = 0.0;
    let mut n = 0usize;
    for (id, err) in &report.per_relation_error {
        if id == excluded {
            continue;
        }
        log_sum += err.max(1e-15).ln();
        n += 1;
    }
    if n == 0 {
        return Err(Error::DegenerateInput(
            "global_error: no relation outside the excluded one".into(),
        ));
    }
    Ok((log_sum / n as f64).exp())
}

/// The instance with the smallest global error; ties break toward the
/// smallest seed.
pub fn select_best(results: &[InstanceResult]) -> Result<&InstanceResult> {
    results
        .iter()
        .min_by(|a, b| {
            a.global_error
                .partial_cmp(&b.global_error)
                .expect("errors are finite")
                .then(a.seed.cmp(&b.seed))
        })
        .ok_or_else(|| Error::DegenerateInput("select_best: empty result list".into()))
}

/// Reconstruct the updated split `G_municipality * S * G_mode^T` from the
/// target relation's factors. Negative cells are clamped to zero; the
/// count of clamped cells is returned alongside.
pub fn updated_mode_split(
    graph: &RelationGraph,
    factors: &FactorSet,
) -> Result<(ModeSplit, usize)> {
    let (raw, municipalities, modes) = reconstruct_target(graph, factors)?;
    let clamped_cells = raw.iter().filter(|v| **v < 0.0).count();
    let counts = raw.mapv(|v| v.max(0.0));
    let split = ModeSplit::from_labeled(municipalities, &modes, counts)?;
    Ok((split, clamped_cells))
}

/// The unclamped reconstruction of the target relation, with its labels.
pub fn reconstruct_target(
    graph: &RelationGraph,
    factors: &FactorSet,
) -> Result<(Array2<f64>, Vec<String>, Vec<String>)> {
    let rel = graph
        .relation(TARGET_RELATION)
        .ok_or_else(|| Error::UnknownRelation(TARGET_RELATION.to_string()))?;
    let raw = trifactor::reconstruct(graph, factors, TARGET_RELATION)?;
    let municipalities = graph
        .concept(rel.source)
        .expect("target source exists")
        .labels
        .clone();
    let modes = graph
        .concept(rel.target)
        .expect("target target exists")
        .labels
        .clone();
    Ok((raw, municipalities, modes))
}

/// Citywide and per-municipality shares of a split. Rows with zero totals
/// are undefined and reported by name.
#[derive(Debug, Clone, PartialEq)]
pub struct SharesReport {
    pub citywide: [f64; 4],
    pub per_municipality: Array2<f64>,
    pub undefined_rows: Vec<String>,
}

pub fn mode_shares(split: &ModeSplit) -> Result<SharesReport> {
    let grand = split.total();
    if grand <= 0.0 {
        return Err(Error::DegenerateInput(
            "mode_shares: all-zero split".into(),
        ));
    }
    let counts = split.counts();
    let mut citywide = [0.0; 4];
    for (i, share) in citywide.iter_mut().enumerate() {
        *share = counts.column(i).sum() / grand;
    }
    let mut per_municipality = Array2::from_elem(counts.dim(), f64::NAN);
    let mut undefined_rows = Vec::new();
    for (row, name) in split.municipalities().iter().enumerate() {
        let row_sum: f64 = counts.row(row).sum();
        if row_sum > 0.0 {
            for col in 0..4 {
                per_municipality[[row, col]] = counts[[row, col]] / row_sum;
            }
        } else {
            undefined_rows.push(name.clone());
        }
    }
    Ok(SharesReport {
        citywide,
        per_municipality,
        undefined_rows,
    })
}

/// Sum one mode column per macro-area, plus a grand total under "TOTAL".
/// Every municipality must be mapped.
pub fn macro_totals(
    split: &ModeSplit,
    mapping: &BTreeMap<String, String>,
    mode: &str,
) -> Result<Vec<(String, f64)>> {
    let column = split.mode_column(mode)?;
    let mut totals: BTreeMap<String, f64> = BTreeMap::new();
    let mut grand = 0.0;
    for (row, name) in split.municipalities().iter().enumerate() {
        let area = mapping
            .get(name)
            .ok_or_else(|| Error::UnknownMunicipality(format!("{name} has no macro-area")))?;
        *totals.entry(area.clone()).or_insert(0.0) += column[row];
        grand += column[row];
    }
    let mut out: Vec<(String, f64)> = totals.into_iter().collect();
    out.push(("TOTAL".to_string(), grand));
    Ok(out)
}

/// Per-mode Pearson r between two splits with Bonferroni correction over
/// the four comparisons. Constant columns come back as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeComparison {
    pub mode: String,
    pub r: Option<f64>,
    pub p_corrected: Option<f64>,
}

pub fn compare_configurations(a: &ModeSplit, b: &ModeSplit) -> Result<Vec<ModeComparison>> {
    // align b's rows to a's municipality order
    let mut b_rows = Vec::with_capacity(a.municipalities().len());
    for name in a.municipalities() {
        let row = b.row_of(name).ok_or_else(|| {
            Error::UnknownMunicipality(format!("{name} missing from second split"))
        })?;
        b_rows.push(row);
    }
    let n = a.municipalities().len();
    let mut out = Vec::with_capacity(MODES.len());
    for (col, mode) in MODES.iter().enumerate() {
        let x: Vec<f64> = (0..n).map(|r| a.counts()[[r, col]]).collect();
        let y: Vec<f64> = b_rows.iter().map(|&r| b.counts()[[r, col]]).collect();
        match pearson(&x, &y) {
            Ok(r) => {
                let p = bonferroni(pearson_pvalue(r, n)?, MODES.len());
                out.push(ModeComparison {
                    mode: mode.to_string(),
                    r: Some(r),
                    p_corrected: Some(p),
                });
            }
            Err(Error::DegenerateInput(_)) => out.push(ModeComparison {
                mode: mode.to_string(),
                r: None,
                p_corrected: None,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Provenance;
    use ndarray::array;

    fn report_with(errors: &[(&str, f64)]) -> FitReport {
        FitReport {
            per_relation_error: errors
                .iter()
                .map(|(id, e)| (id.to_string(), *e))
                .collect(),
            objective_trace: vec![1.0],
            iterations_run: 0,
            converged: false,
            seed: 0,
        }
    }

    #[test]
    fn global_error_is_the_geometric_mean() {
        let report = report_with(&[("R02", 0.04), ("R03", 0.25)]);
        let e = global_error(&report, "R01").unwrap();
        assert!((e - 0.1).abs() < 1e-12);

        let single = report_with(&[("R02", 0.3)]);
        assert!((global_error(&single, "R01").unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn global_error_ignores_the_excluded_relation() {
        let without = report_with(&[("R02", 0.04), ("R03", 0.25)]);
        let with = report_with(&[("R01", 99.0), ("R02", 0.04), ("R03", 0.25)]);
        assert_eq!(
            global_error(&without, "R01").unwrap(),
            global_error(&with, "R01").unwrap()
        );
    }

    #[test]
    fn global_error_floors_zero_errors() {
        let report = report_with(&[("R02", 0.0)]);
        let floored = global_error(&report, "R01").unwrap();
        assert!((floored - 1e-15).abs() / 1e-15 < 1e-12);
        let only_excluded = report_with(&[("R01", 0.5)]);
        assert!(global_error(&only_excluded, "R01").is_err());
    }

    fn instance(seed: u64, e: f64) -> InstanceResult {
        InstanceResult {
            seed,
            report: report_with(&[("R02", e)]),
            global_error: e,
            updated_split: ModeSplit::new(vec!["m".into()], array![[1.0, 1.0, 1.0, 1.0]]).unwrap(),
            clamped_cells: 0,
        }
    }

    #[test]
    fn select_best_picks_min_error_with_seed_tiebreak() {
        let results = vec![instance(0, 0.5), instance(1, 0.2), instance(2, 0.9)];
        assert_eq!(select_best(&results).unwrap().seed, 1);

        let tied = vec![instance(7, 0.2), instance(3, 0.2)];
        assert_eq!(select_best(&tied).unwrap().seed, 3);

        let single = vec![instance(4, 0.4)];
        assert_eq!(select_best(&single).unwrap().seed, 4);
        assert!(select_best(&[]).is_err());

        for r in &results {
            assert!(select_best(&results).unwrap().global_error <= r.global_error);
        }
    }

    fn tiny_graph() -> RelationGraph {
        let mut g = RelationGraph::new();
        let muni = g
            .add_concept("municipality", vec!["m1".into(), "m2".into()])
            .unwrap();
        let mode = g
            .add_concept("mode", crate::appusage::mode_labels())
            .unwrap();
        let income = g
            .add_concept("income", vec!["q1".into(), "q2".into()])
            .unwrap();
        g.add_relation_named(
            "R01",
            muni,
            mode,
            array![[30.0, 50.0, 15.0, 5.0], [20.0, 40.0, 30.0, 10.0]],
            Provenance::Survey,
        )
        .unwrap();
        g.add_relation_named("R06", muni, income, array![[5.0, 3.0], [2.0, 6.0]], Provenance::Census)
            .unwrap();
        g.add_relation_named(
            "R11",
            income,
            mode,
            array![[0.5, 0.2, 0.2, 0.1], [0.2, 0.6, 0.1, 0.1]],
            Provenance::Survey,
        )
        .unwrap();
        g
    }

    #[test]
    fn updated_split_with_identity_factors_returns_r01() {
        let g = tiny_graph();
        let r01 = g.relation("R01").unwrap().values.clone();
        let factors = FactorSet::from_parts(
            vec![Array2::eye(2), Array2::eye(4), Array2::eye(2)],
            vec![r01.clone(), Array2::zeros((2, 2)), Array2::zeros((2, 4))],
        );
        let (split, clamped) = updated_mode_split(&g, &factors).unwrap();
        assert_eq!(split.counts(), &r01);
        assert_eq!(clamped, 0);
        assert_eq!(split.counts().dim(), (2, 4));
    }

    #[test]
    fn updated_split_clamps_negative_cells() {
        let g = tiny_graph();
        let mut s = g.relation("R01").unwrap().values.clone();
        s[[0, 0]] = -3.0;
        let factors = FactorSet::from_parts(
            vec![Array2::eye(2), Array2::eye(4), Array2::eye(2)],
            vec![s, Array2::zeros((2, 2)), Array2::zeros((2, 4))],
        );
        let (split, clamped) = updated_mode_split(&g, &factors).unwrap();
        assert_eq!(clamped, 1);
        assert_eq!(split.counts()[[0, 0]], 0.0);
    }

    #[test]
    fn run_instances_is_deterministic_and_seed_ordered() {
        let g = tiny_graph();
        let ranks = g.default_ranks();
        let config = RunConfig {
            n_instances: 3,
            base_seed: 10,
            solver: SolverConfig {
                max_iterations: 40,
                ..SolverConfig::default()
            },
            ..RunConfig::default()
        };
        let a = run_instances(&g, &ranks, &config).unwrap();
        let b = run_instances(&g, &ranks, &config).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(
            a.iter().map(|r| r.seed).collect::<Vec<_>>(),
            vec![10, 11, 12]
        );
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.global_error.to_bits(), y.global_error.to_bits());
            assert_eq!(x.updated_split, y.updated_split);
        }

        let single = RunConfig {
            n_instances: 1,
            base_seed: 99,
            ..config
        };
        let r = run_instances(&g, &ranks, &single).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].seed, 99);
    }

    #[test]
    fn configuration_filtering_drops_the_right_relations() {
        assert_eq!(DataConfiguration::All.dropped_relations().len(), 0);
        assert_eq!(DataConfiguration::NoDpi.dropped_relations(), &["R09", "R13"]);
        let no_mobile = DataConfiguration::NoMobile.dropped_relations();
        for id in ["R09", "R13", "R05", "R07", "R08", "R10"] {
            assert!(no_mobile.contains(&id));
        }
    }

    #[test]
    fn mode_shares_reference_row() {
        let split = ModeSplit::new(vec!["m".into()], array![[30.0, 50.0, 15.0, 5.0]]).unwrap();
        let shares = mode_shares(&split).unwrap();
        assert_eq!(shares.citywide, [0.30, 0.50, 0.15, 0.05]);
        let row: f64 = shares.per_municipality.row(0).sum();
        assert!((row - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mode_shares_flags_zero_rows() {
        let split = ModeSplit::new(
            vec!["a".into(), "b".into()],
            array![[1.0, 1.0, 1.0, 1.0], [0.0, 0.0, 0.0, 0.0]],
        )
        .unwrap();
        let shares = mode_shares(&split).unwrap();
        assert_eq!(shares.undefined_rows, vec!["b".to_string()]);
        assert!(shares.per_municipality[[1, 0]].is_nan());

        let zero = ModeSplit::new(vec!["a".into()], Array2::zeros((1, 4))).unwrap();
        assert!(mode_shares(&zero).is_err());
    }

    #[test]
    fn macro_totals_sums_the_requested_mode() {
        let split = ModeSplit::new(
            vec!["a".into(), "b".into(), "c".into()],
            array![
                [10.0, 1.0, 1.0, 1.0],
                [20.0, 1.0, 1.0, 1.0],
                [5.0, 1.0, 1.0, 1.0]
            ],
        )
        .unwrap();
        let mapping: BTreeMap<String, String> = [
            ("a", "North"),
            ("b", "North"),
            ("c", "South"),
        ]
        .iter()
        .map(|(m, a)| (m.to_string(), a.to_string()))
        .collect();
        let totals = macro_totals(&split, &mapping, "mass-transit").unwrap();
        assert_eq!(
            totals,
            vec![
                ("North".to_string(), 30.0),
                ("South".to_string(), 5.0),
                ("TOTAL".to_string(), 35.0)
            ]
        );

        let incomplete: BTreeMap<String, String> =
            [("a".to_string(), "North".to_string())].into_iter().collect();
        assert!(macro_totals(&split, &incomplete, "mass-transit").is_err());

        // an all-zero split yields zero totals
        let zero = ModeSplit::new(vec!["a".into()], Array2::zeros((1, 4))).unwrap();
        let zero_map: BTreeMap<String, String> =
            [("a".to_string(), "North".to_string())].into_iter().collect();
        let totals = macro_totals(&zero, &zero_map, "mass-transit").unwrap();
        assert!(totals.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn compare_identical_splits_gives_unit_correlations() {
        let split = ModeSplit::new(
            vec!["a".into(), "b".into(), "c".into()],
            array![
                [10.0, 2.0, 3.0, 1.0],
                [20.0, 5.0, 1.0, 2.0],
                [5.0, 8.0, 2.0, 4.0]
            ],
        )
        .unwrap();
        let cmp = compare_configurations(&split, &split).unwrap();
        assert_eq!(cmp.len(), 4);
        for c in &cmp {
            assert_eq!(c.r, Some(1.0));
            assert_eq!(c.p_corrected, Some(0.0));
        }
    }

    #[test]
    fn compare_aligns_by_label_not_position() {
        let a = ModeSplit::new(
            vec!["a".into(), "b".into(), "c".into()],
            array![
                [10.0, 2.0, 3.0, 1.0],
                [20.0, 5.0, 1.0, 2.0],
                [5.0, 8.0, 2.0, 4.0]
            ],
        )
        .unwrap();
        let b = ModeSplit::new(
            vec!["c".into(), "a".into(), "b".into()],
            array![
                [5.0, 8.0, 2.0, 4.0],
                [10.0, 2.0, 3.0, 1.0],
                [20.0, 5.0, 1.0, 2.0]
            ],
        )
        .unwrap();
        let cmp = compare_configurations(&a, &b).unwrap();
        for c in &cmp {
            assert_eq!(c.r, Some(1.0));
        }
    }

    #[test]
    fn compare_reports_constant_columns_as_undefined() {
        let a = ModeSplit::new(
            vec!["a".into(), "b".into(), "c".into()],
            array![
                [10.0, 7.0, 3.0, 1.0],
                [20.0, 7.0, 1.0, 2.0],
                [5.0, 7.0, 2.0, 4.0]
            ],
        )
        .unwrap();
        let cmp = compare_configurations(&a, &a).unwrap();
        assert_eq!(cmp[1].r, None);
        assert_eq!(cmp[0].r, Some(1.0));
    }
}
