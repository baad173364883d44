//! Collective non-negative matrix tri-factorization.
//!
//! Every relation matrix `M` between concepts `i` and `j` is modelled as
//! `M ~ G_i * S * G_j^T`, where each concept owns a single non-negative
//! factor `G` shared across all relations it participates in, and each
//! relation owns a sign-free backbone `S`. Fitting alternates exact
//! least-squares backbone solves with multiplicative factor updates until
//! the summed Frobenius objective stops moving.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{RankAssignment, RelationGraph};
use crate::linalg::{frobenius, negative_part, positive_part, pseudo_inverse};

/// One non-negative factor per concept, one backbone per relation, both
/// aligned to the graph's concept/relation order.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    factors: Vec<Array2<f64>>,
    backbones: Vec<Array2<f64>>,
}

impl FactorSet {
    /// Factor matrix of the concept at `concept_idx` (graph order),
    /// shape `cardinality x rank`.
    pub fn factor(&self, concept_idx: usize) -> &Array2<f64> {
        &self.factors[concept_idx]
    }

    /// Backbone of the relation at `relation_idx` (graph order),
    /// shape `rank_source x rank_target`.
    pub fn backbone(&self, relation_idx: usize) -> &Array2<f64> {
        &self.backbones[relation_idx]
    }

    pub fn factors(&self) -> &[Array2<f64>] {
        &self.factors
    }

    pub fn backbones(&self) -> &[Array2<f64>] {
        &self.backbones
    }

    /// Assemble from pre-computed parts (used when reloading persisted
    /// factors). Order must match the graph.
    pub fn from_parts(factors: Vec<Array2<f64>>, backbones: Vec<Array2<f64>>) -> Self {
        FactorSet { factors, backbones }
    }

    /// Smallest entry over all factor matrices.
    pub fn min_factor_entry(&self) -> f64 {
        self.factors
            .iter()
            .flat_map(|g| g.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Solver knobs. Defaults finish desk-scale fits in seconds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub relative_tolerance: f64,
    pub seed: u64,
    pub epsilon: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 2000,
            relative_tolerance: 1e-5,
            seed: 0,
            epsilon: 1e-12,
        }
    }
}

/// What a fit run did: objective per iteration, final normalized error per
/// relation, and whether the tolerance was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub per_relation_error: BTreeMap<String, f64>,
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub seed: u64,
}

/// Random non-negative factors plus least-squares backbones.
///
/// Each `G` entry is an independent uniform draw from `(0, 1]`; the same
/// seed yields a bit-identical `FactorSet`.
pub fn initialize(graph: &RelationGraph, ranks: &RankAssignment, seed: u64) -> Result<FactorSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors = Vec::with_capacity(graph.n_concepts());
    for concept in graph.concepts() {
        let k = ranks
            .rank_of(&concept.name)
            .ok_or_else(|| Error::MissingRank(concept.name.clone()))?;
        let n = concept.cardinality();
        // 1 - u maps [0, 1) onto (0, 1]
        let g = Array2::from_shape_simple_fn((n, k), || 1.0 - rng.random::<f64>());
        factors.push(g);
    }
    let mut set = FactorSet {
        factors,
        backbones: vec![Array2::zeros((0, 0)); graph.n_relations()],
    };
    update_backbones(graph, &mut set);
    Ok(set)
}

/// Exact backbone solve: for each relation,
/// `S = pinv(Gi^T Gi) Gi^T M Gj pinv(Gj^T Gj)`,
/// the least-squares minimizer of `||M - Gi S Gj^T||` for fixed factors.
pub fn update_backbones(graph: &RelationGraph, set: &mut FactorSet) {
    for (idx, rel) in graph.relations().iter().enumerate() {
        let gi = &set.factors[rel.source.0];
        let gj = &set.factors[rel.target.0];
        let gi_gram_inv = pseudo_inverse(&gi.t().dot(gi));
        let gj_gram_inv = pseudo_inverse(&gj.t().dot(gj));
        let s = gi_gram_inv
            .dot(&gi.t())
            .dot(&rel.values)
            .dot(gj)
            .dot(&gj_gram_inv);
        set.backbones[idx] = s;
    }
}

/// One multiplicative factor sweep:
/// `G <- G o sqrt(enabler / (suppressor + epsilon))` with the positive and
/// negative parts of the relation terms split between numerator and
/// denominator, so non-negativity is preserved. All concepts update from
/// the same snapshot. Entries whose enabler and suppressor are both zero
/// are left unchanged.
pub fn update_factors(graph: &RelationGraph, set: &mut FactorSet, epsilon: f64) {
    let n_concepts = graph.n_concepts();
    let mut enabler: Vec<Array2<f64>> = set
        .factors
        .iter()
        .map(|g| Array2::zeros(g.dim()))
        .collect();
    let mut suppressor = enabler.clone();

    for (idx, rel) in graph.relations().iter().enumerate() {
        let gi = &set.factors[rel.source.0];
        let gj = &set.factors[rel.target.0];
        let s = &set.backbones[idx];
        let m = &rel.values;

        // source side: a = M Gj S^T, b = S Gj^T Gj S^T
        let a = m.dot(gj).dot(&s.t());
        let b = s.dot(&gj.t().dot(gj)).dot(&s.t());
        enabler[rel.source.0] += &(positive_part(&a) + gi.dot(&negative_part(&b)));
        suppressor[rel.source.0] += &(negative_part(&a) + gi.dot(&positive_part(&b)));

        // target side: c = M^T Gi S, d = S^T Gi^T Gi S
        let c = m.t().dot(gi).dot(s);
        let d = s.t().dot(&gi.t().dot(gi)).dot(s);
        enabler[rel.target.0] += &(positive_part(&c) + gj.dot(&negative_part(&d)));
        suppressor[rel.target.0] += &(negative_part(&c) + gj.dot(&positive_part(&d)));
    }

    for ci in 0..n_concepts {
        let g = &mut set.factors[ci];
        ndarray::Zip::from(g)
            .and(&enabler[ci])
            .and(&suppressor[ci])
            .for_each(|g, &en, &sup| {
                if en != 0.0 || sup != 0.0 {
                    *g *= (en / (sup + epsilon)).sqrt();
                }
            });
    }
}

/// `sum over relations of ||M - Gi S Gj^T||` (Frobenius, unsquared).
pub fn objective(graph: &RelationGraph, set: &FactorSet) -> f64 {
    graph
        .relations()
        .iter()
        .enumerate()
        .map(|(idx, rel)| {
            let approx = reconstruct_idx(set, rel.source.0, idx, rel.target.0);
            frobenius((&rel.values - &approx).view())
        })
        .sum()
}

fn reconstruct_idx(set: &FactorSet, src: usize, rel_idx: usize, tgt: usize) -> Array2<f64> {
    set.factors[src]
        .dot(&set.backbones[rel_idx])
        .dot(&set.factors[tgt].t())
}

/// `Gi S Gj^T` for one relation.
pub fn reconstruct(
    graph: &RelationGraph,
    set: &FactorSet,
    relation_id: &str,
) -> Result<Array2<f64>> {
    let rel = graph
        .relation(relation_id)
        .ok_or_else(|| Error::UnknownRelation(relation_id.to_string()))?;
    let idx = graph
        .relations()
        .iter()
        .position(|r| r.id == relation_id)
        .expect("relation found by id");
    Ok(reconstruct_idx(set, rel.source.0, idx, rel.target.0))
}

/// Normalized reconstruction error `||M - M_hat|| / ||M||`.
pub fn relation_error(m: &Array2<f64>, m_hat: &Array2<f64>) -> Result<f64> {
    if m.dim() != m_hat.dim() {
        return Err(Error::DegenerateInput(format!(
            "relation_error: shapes {:?} vs {:?}",
            m.dim(),
            m_hat.dim()
        )));
    }
    let norm = frobenius(m.view());
    if norm == 0.0 {
        return Err(Error::DegenerateInput(
            "relation_error: zero-norm reference matrix".into(),
        ));
    }
    Ok(frobenius((m - m_hat).view()) / norm)
}

/// Normalized error of every relation under the current factors.
pub fn per_relation_errors(graph: &RelationGraph, set: &FactorSet) -> BTreeMap<String, f64> {
    graph
        .relations()
        .iter()
        .enumerate()
        .map(|(idx, rel)| {
            let approx = reconstruct_idx(set, rel.source.0, idx, rel.target.0);
            let norm = frobenius(rel.values.view());
            let err = if norm == 0.0 {
                0.0
            } else {
                frobenius((&rel.values - &approx).view()) / norm
            };
            (rel.id.clone(), err)
        })
        .collect()
}

/// Fit the whole graph: alternate factor sweeps and backbone solves until
/// the relative objective change drops below tolerance or the iteration cap
/// is hit. Non-convergence is reported, not thrown.
pub fn fit(
    graph: &RelationGraph,
    ranks: &RankAssignment,
    config: &SolverConfig,
) -> Result<(FactorSet, FitReport)> {
    let mut set = initialize(graph, ranks, config.seed)?;
    let mut trace = vec![objective(graph, &set)];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.max_iterations {
        update_factors(graph, &mut set, config.epsilon);
        update_backbones(graph, &mut set);
        let obj = objective(graph, &set);
        let prev = *trace.last().expect("trace is non-empty");
        trace.push(obj);
        iterations += 1;
        if prev == 0.0 || ((prev - obj).abs() / prev) < config.relative_tolerance {
            converged = true;
            break;
        }
    }

    let report = FitReport {
        per_relation_error: per_relation_errors(graph, &set),
        objective_trace: trace,
        iterations_run: iterations,
        converged,
        seed: config.seed,
    };
    Ok((set, report))
}
