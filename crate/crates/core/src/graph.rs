//! The unified representation: concepts, relation matrices between them, and
//! per-concept latent ranks. Everything downstream (the solver, the runner)
//! reads this structure.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Handle to a concept inside one `RelationGraph`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConceptId(pub usize);

/// An entity class (municipality, mode, waypoint, ...) with its ordered
/// element labels. Cardinality is the number of labels.
#[derive(Debug, Clone)]
pub struct Concept {
    pub id: ConceptId,
    pub name: String,
    pub labels: Vec<String>,
}

impl Concept {
    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }
}

/// Where a relation's entries came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Survey,
    Census,
    Mobile,
    Manual,
    Derived,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Survey => "survey",
            Provenance::Census => "census",
            Provenance::Mobile => "mobile",
            Provenance::Manual => "manual",
            Provenance::Derived => "derived",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "survey" => Ok(Provenance::Survey),
            "census" => Ok(Provenance::Census),
            "mobile" => Ok(Provenance::Mobile),
            "manual" => Ok(Provenance::Manual),
            "derived" => Ok(Provenance::Derived),
            other => Err(Error::DegenerateInput(format!(
                "unknown provenance tag '{other}'"
            ))),
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A matrix linking two concepts. Immutable once stored.
#[derive(Debug, Clone)]
pub struct Relation {
    pub id: String,
    pub source: ConceptId,
    pub target: ConceptId,
    pub values: Array2<f64>,
    pub provenance: Provenance,
}

/// Latent rank per concept, keyed by concept name so an assignment survives
/// graph filtering.
#[derive(Debug, Clone, Default)]
pub struct RankAssignment(pub BTreeMap<String, usize>);

impl RankAssignment {
    pub fn rank_of(&self, concept_name: &str) -> Option<usize> {
        self.0.get(concept_name).copied()
    }
}

/// Rank heuristic `floor(2 * sqrt(cardinality) - 1)`, clamped to
/// `[1, cardinality]`.
pub fn rank_heuristic(cardinality: usize) -> Result<usize> {
    if cardinality == 0 {
        return Err(Error::ZeroCardinality);
    }
    let raw = (2.0 * (cardinality as f64).sqrt() - 1.0).floor();
    let k = if raw < 1.0 { 1 } else { raw as usize };
    Ok(k.min(cardinality))
}

/// A problem found by [`RelationGraph::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoTargetRelation { target: String },
    MissingConcept { relation: String, concept: usize },
    ShapeMismatch { relation: String },
    BadEntry { relation: String },
    DuplicatePair { relation: String },
    Disconnected { concept: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoTargetRelation { target } => {
                write!(f, "no target relation '{target}' in graph")
            }
            Violation::MissingConcept { relation, concept } => {
                write!(f, "relation '{relation}' references missing concept #{concept}")
            }
            Violation::ShapeMismatch { relation } => {
                write!(f, "relation '{relation}' shape does not match its concepts")
            }
            Violation::BadEntry { relation } => {
                write!(f, "relation '{relation}' contains a negative or non-finite entry")
            }
            Violation::DuplicatePair { relation } => {
                write!(f, "relation '{relation}' duplicates an existing (source, target) pair")
            }
            Violation::Disconnected { concept } => {
                write!(f, "concept '{concept}' is not connected to the target relation")
            }
        }
    }
}

/// Concepts plus the relation matrices between them.
///
/// Build single-threaded with `add_concept` / `add_relation`, then treat as
/// frozen; a frozen graph is `Send + Sync` and safe to read from many
/// threads.
#[derive(Debug, Clone, Default)]
pub struct RelationGraph {
    concepts: Vec<Concept>,
    concept_by_name: HashMap<String, ConceptId>,
    relations: Vec<Relation>,
    relation_by_id: HashMap<String, usize>,
}

impl RelationGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assemble a graph from raw parts without the builder checks.
    /// [`RelationGraph::validate`] reports whatever is wrong with the result.
    pub fn from_parts(concepts: Vec<Concept>, relations: Vec<Relation>) -> Self {
        let concept_by_name = concepts
            .iter()
            .map(|c| (c.name.clone(), c.id))
            .collect();
        let relation_by_id = relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        RelationGraph {
            concepts,
            concept_by_name,
            relations,
            relation_by_id,
        }
    }

    pub fn add_concept(&mut self, name: &str, labels: Vec<String>) -> Result<ConceptId> {
        if self.concept_by_name.contains_key(name) {
            return Err(Error::DuplicateConcept(name.to_string()));
        }
        if labels.is_empty() {
            return Err(Error::BadLabels {
                name: name.to_string(),
            });
        }
        let mut seen = HashSet::with_capacity(labels.len());
        if !labels.iter().all(|l| seen.insert(l.as_str())) {
            return Err(Error::BadLabels {
                name: name.to_string(),
            });
        }
        let id = ConceptId(self.concepts.len());
        self.concepts.push(Concept {
            id,
            name: name.to_string(),
            labels,
        });
        self.concept_by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Store a relation under an auto-assigned id (`R01`, `R02`, ... in
    /// insertion order).
    pub fn add_relation(
        &mut self,
        source: ConceptId,
        target: ConceptId,
        values: Array2<f64>,
        provenance: Provenance,
    ) -> Result<String> {
        let id = format!("R{:02}", self.relations.len() + 1);
        self.add_relation_named(&id, source, target, values, provenance)
    }

    /// Store a relation under an explicit id.
    pub fn add_relation_named(
        &mut self,
        id: &str,
        source: ConceptId,
        target: ConceptId,
        values: Array2<f64>,
        provenance: Provenance,
    ) -> Result<String> {
        if self.relation_by_id.contains_key(id) {
            return Err(Error::DuplicateRelation(id.to_string()));
        }
        let src = self
            .concepts
            .get(source.0)
            .ok_or(Error::UnknownConcept(source.0))?;
        let tgt = self
            .concepts
            .get(target.0)
            .ok_or(Error::UnknownConcept(target.0))?;
        if values.nrows() != src.cardinality() || values.ncols() != tgt.cardinality() {
            return Err(Error::ShapeMismatch {
                id: id.to_string(),
                rows: values.nrows(),
                cols: values.ncols(),
                want_rows: src.cardinality(),
                want_cols: tgt.cardinality(),
            });
        }
        if let Some(((r, c), &v)) = values
            .indexed_iter()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::BadEntry {
                id: id.to_string(),
                row: r,
                col: c,
                value: v,
            });
        }
        if self
            .relations
            .iter()
            .any(|r| r.source == source && r.target == target)
        {
            return Err(Error::DuplicatePair {
                from_concept: src.name.clone(),
                to_concept: tgt.name.clone(),
            });
        }
        self.relation_by_id
            .insert(id.to_string(), self.relations.len());
        self.relations.push(Relation {
            id: id.to_string(),
            source,
            target,
            values,
            provenance,
        });
        Ok(id.to_string())
    }

    pub fn concept(&self, id: ConceptId) -> Option<&Concept> {
        self.concepts.get(id.0)
    }

    pub fn concept_by_name(&self, name: &str) -> Option<&Concept> {
        self.concept_by_name.get(name).map(|id| &self.concepts[id.0])
    }

    pub fn relation(&self, id: &str) -> Option<&Relation> {
        self.relation_by_id.get(id).map(|&i| &self.relations[i])
    }

    pub fn concepts(&self) -> &[Concept] {
        &self.concepts
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn n_concepts(&self) -> usize {
        self.concepts.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    /// Check structural soundness. Violations are returned, never thrown:
    /// endpoint existence, shape agreement, entry domain, pair uniqueness,
    /// and connectivity of every concept to the update-target relation.
    pub fn validate(&self, target_relation: &str) -> Vec<Violation> {
        let mut out = Vec::new();

        let target = self.relation(target_relation);
        if target.is_none() {
            out.push(Violation::NoTargetRelation {
                target: target_relation.to_string(),
            });
        }

        let mut seen_pairs = HashSet::new();
        for rel in &self.relations {
            let src = self.concepts.get(rel.source.0);
            let tgt = self.concepts.get(rel.target.0);
            if src.is_none() {
                out.push(Violation::MissingConcept {
                    relation: rel.id.clone(),
                    concept: rel.source.0,
                });
            }
            if tgt.is_none() {
                out.push(Violation::MissingConcept {
                    relation: rel.id.clone(),
                    concept: rel.target.0,
                });
            }
            if let (Some(src), Some(tgt)) = (src, tgt) {
                if rel.values.nrows() != src.cardinality()
                    || rel.values.ncols() != tgt.cardinality()
                {
                    out.push(Violation::ShapeMismatch {
                        relation: rel.id.clone(),
                    });
                }
                if !seen_pairs.insert((rel.source, rel.target)) {
                    out.push(Violation::DuplicatePair {
                        relation: rel.id.clone(),
                    });
                }
            }
            if rel.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                out.push(Violation::BadEntry {
                    relation: rel.id.clone(),
                });
            }
        }

        // Connectivity: walk concept-to-concept edges starting from the
        // target relation's endpoints.
        if let Some(target) = target {
            let mut adj: HashMap<ConceptId, Vec<ConceptId>> = HashMap::new();
            for rel in &self.relations {
                if self.concepts.get(rel.source.0).is_some()
                    && self.concepts.get(rel.target.0).is_some()
                {
                    adj.entry(rel.source).or_default().push(rel.target);
                    adj.entry(rel.target).or_default().push(rel.source);
                }
            }
            let mut visited = HashSet::new();
            let mut queue = VecDeque::from([target.source, target.target]);
            while let Some(c) = queue.pop_front() {
                if visited.insert(c) {
                    if let Some(next) = adj.get(&c) {
                        queue.extend(next.iter().copied());
                    }
                }
            }
            for concept in &self.concepts {
                if !visited.contains(&concept.id) {
                    out.push(Violation::Disconnected {
                        concept: concept.name.clone(),
                    });
                }
            }
        }

        out
    }

    /// A copy of the graph without the listed relations. Concepts left with
    /// no relation are pruned; remaining concepts and relations keep their
    /// original order (and relations keep their ids).
    pub fn without_relations(&self, drop: &[&str]) -> RelationGraph {
        let kept: Vec<&Relation> = self
            .relations
            .iter()
            .filter(|r| !drop.contains(&r.id.as_str()))
            .collect();
        let used: HashSet<ConceptId> = kept
            .iter()
            .flat_map(|r| [r.source, r.target])
            .collect();

        let mut out = RelationGraph::new();
        let mut remap: HashMap<ConceptId, ConceptId> = HashMap::new();
        for concept in &self.concepts {
            if used.contains(&concept.id) {
                let new_id = out
                    .add_concept(&concept.name, concept.labels.clone())
                    .expect("copying a valid concept");
                remap.insert(concept.id, new_id);
            }
        }
        for rel in kept {
            out.add_relation_named(
                &rel.id,
                remap[&rel.source],
                remap[&rel.target],
                rel.values.clone(),
                rel.provenance,
            )
            .expect("copying a valid relation");
        }
        out
    }

    /// Rank per concept from [`rank_heuristic`].
    pub fn default_ranks(&self) -> RankAssignment {
        let map = self
            .concepts
            .iter()
            .map(|c| {
                let k = rank_heuristic(c.cardinality()).expect("cardinality >= 1");
                (c.name.clone(), k)
            })
            .collect();
        RankAssignment(map)
    }
}
