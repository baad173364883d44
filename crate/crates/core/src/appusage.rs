//! Transforms tower-aggregated app access counts into the waypoint x app
//! relation (log-odds scored) and builds the manual app x mode association
//! matrix.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::priors::MODES;

/// Access counts, rows = towers (waypoints), columns = unified app domains.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageCounts {
    pub towers: Vec<String>,
    pub apps: Vec<String>,
    pub counts: Array2<f64>,
}

impl UsageCounts {
    pub fn new(towers: Vec<String>, apps: Vec<String>, counts: Array2<f64>) -> Result<Self> {
        if counts.dim() != (towers.len(), apps.len()) {
            return Err(Error::DegenerateInput(format!(
                "usage counts shape {:?} does not match {} towers x {} apps",
                counts.dim(),
                towers.len(),
                apps.len()
            )));
        }
        if counts.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::DegenerateInput(
                "usage counts must be non-negative and finite".into(),
            ));
        }
        Ok(UsageCounts {
            towers,
            apps,
            counts,
        })
    }
}

/// Reduce one hostname to its registrable base: the last two labels, or one
/// label more when the tail matches a configured multi-label suffix
/// ("co.uk" style). Idempotent.
pub fn unify_domain(raw: &str, suffixes: &[String]) -> Result<String> {
    let domain = raw.trim().to_ascii_lowercase();
    if domain.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let labels: Vec<&str> = domain.split('.').collect();
    for suffix in suffixes {
        let suffix_labels: Vec<&str> = suffix.split('.').collect();
        let keep = suffix_labels.len() + 1;
        if labels.len() >= keep && labels[labels.len() - suffix_labels.len()..] == suffix_labels[..]
        {
            return Ok(labels[labels.len() - keep..].join("."));
        }
    }
    let keep = labels.len().min(2);
    Ok(labels[labels.len() - keep..].join("."))
}

/// Map every raw domain to its unified form.
pub fn unify_domains(raw: &[String], suffixes: &[String]) -> Result<BTreeMap<String, String>> {
    raw.iter()
        .map(|d| Ok((d.clone(), unify_domain(d, suffixes)?)))
        .collect()
}

/// Shannon entropy (natural log) of a count vector's normalized
/// distribution.
pub fn shannon_entropy(counts: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = counts.filter(|v| *v > 0.0).collect();
    let total: f64 = values.iter().sum();
    values
        .iter()
        .map(|&v| {
            let p = v / total;
            -p * p.ln()
        })
        .sum()
}

/// Shannon entropy of each app's tower distribution, then drop the lowest
/// `drop_fraction` quantile (spatially concentrated apps) along with any
/// zero-total app. Returns the kept column indices in original order; ties
/// on entropy break by column position.
pub fn entropy_filter(counts: &UsageCounts, drop_fraction: f64) -> Result<Vec<usize>> {
    let n_apps = counts.apps.len();
    let mut entropy: Vec<(usize, f64)> = Vec::new();
    for a in 0..n_apps {
        let col = counts.counts.column(a);
        if col.sum() <= 0.0 {
            continue;
        }
        entropy.push((a, shannon_entropy(col.iter().copied())));
    }
    if entropy.is_empty() {
        return Err(Error::DegenerateInput(
            "entropy_filter: no app with positive total".into(),
        ));
    }
    let n_drop = (drop_fraction * entropy.len() as f64).floor() as usize;
    let mut by_entropy = entropy.clone();
    by_entropy.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let dropped: std::collections::HashSet<usize> =
        by_entropy[..n_drop].iter().map(|(i, _)| *i).collect();
    Ok(entropy
        .into_iter()
        .map(|(i, _)| i)
        .filter(|i| !dropped.contains(i))
        .collect())
}

/// Signed z-scored log-odds of each app's tower distribution against the
/// global tower-total distribution, with a symmetric Dirichlet prior.
///
/// For app `a` with count `y_t` at tower `t`, app total `y`, tower total
/// `n_t`, grand total `n`, prior mass `alpha_0` split evenly over towers
/// (`alpha_t = alpha_0 / |T|`), and the background `b_t = y * n_t / n`
/// (the app's volume redistributed by the global tower distribution):
///
/// ```text
/// delta_t = ln((y_t + alpha_t) / (y + alpha_0 - y_t - alpha_t))
///         - ln((b_t + alpha_t) / (y + alpha_0 - b_t - alpha_t))
/// sigma_t = sqrt(1 / (y_t + alpha_t) + 1 / (b_t + alpha_t))
/// z_t     = delta_t / sigma_t
/// ```
///
/// An app whose distribution exactly matches the global one scores 0 at
/// every tower; towers with zero total traffic are excluded and score 0.
pub fn log_odds_zscores(counts: &UsageCounts, alpha0: f64) -> Array2<f64> {
    let (n_towers, n_apps) = counts.counts.dim();
    let mut scores = Array2::zeros((n_towers, n_apps));
    if n_towers == 0 || n_apps == 0 {
        return scores;
    }
    let alpha_t = alpha0 / n_towers as f64;
    let tower_totals: Vec<f64> = (0..n_towers).map(|t| counts.counts.row(t).sum()).collect();
    let grand: f64 = tower_totals.iter().sum();
    if grand == 0.0 {
        return scores;
    }
    for a in 0..n_apps {
        let col = counts.counts.column(a);
        let y: f64 = col.sum();
        if y == 0.0 {
            continue;
        }
        for t in 0..n_towers {
            if tower_totals[t] == 0.0 {
                continue;
            }
            let y_t = col[t];
            // products are exact for count-scale integers, so a
            // proportional column makes b_t == y_t bitwise
            let b_t = y * tower_totals[t] / grand;
            if y_t == b_t {
                continue;
            }
            let delta = ((y_t + alpha_t) / (y + alpha0 - y_t - alpha_t)).ln()
                - ((b_t + alpha_t) / (y + alpha0 - b_t - alpha_t)).ln();
            let sigma = (1.0 / (y_t + alpha_t) + 1.0 / (b_t + alpha_t)).sqrt();
            scores[[t, a]] = delta / sigma;
        }
    }
    scores
}

/// The non-negative version consumed by the fusion: negative z-scores
/// clipped to 0.
pub fn log_odds_dirichlet(counts: &UsageCounts, alpha0: f64) -> Array2<f64> {
    log_odds_zscores(counts, alpha0).mapv(|z| z.max(0.0))
}

/// Build the app x mode association matrix. Associated apps split weight 1
/// evenly over their modes; unassociated apps get 0.25 on every mode, so
/// every row sums to exactly 1.
pub fn build_mode_association(
    associations: &[(String, Vec<String>)],
    apps: &[String],
    modes: &[String],
) -> Result<Array2<f64>> {
    let mode_idx = |name: &str| -> Result<usize> {
        modes
            .iter()
            .position(|m| m == name)
            .ok_or_else(|| Error::UnknownMode(name.to_string()))
    };

    let mut by_app: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (app, assoc_modes) in associations {
        let mut cols = Vec::with_capacity(assoc_modes.len());
        for m in assoc_modes {
            cols.push(mode_idx(m)?);
        }
        cols.sort_unstable();
        cols.dedup();
        by_app.insert(app.as_str(), cols);
    }

    let mut out = Array2::zeros((apps.len(), modes.len()));
    for (row, app) in apps.iter().enumerate() {
        match by_app.get(app.as_str()) {
            Some(cols) if !cols.is_empty() => {
                let w = 1.0 / cols.len() as f64;
                // assign the remainder to the last mode so the row sums to
                // exactly 1 in floating point
                for &c in &cols[..cols.len() - 1] {
                    out[[row, c]] = w;
                }
                out[[row, cols[cols.len() - 1]]] = 1.0 - w * (cols.len() - 1) as f64;
            }
            _ => {
                for c in 0..modes.len() {
                    out[[row, c]] = 1.0 / modes.len() as f64;
                }
            }
        }
    }
    Ok(out)
}

/// Canonical mode labels as owned strings, in [`MODES`] order.
pub fn mode_labels() -> Vec<String> {
    MODES.iter().map(|m| m.to_string()).collect()
}
