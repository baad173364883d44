//! The initial guess of the updated mode split: projects a survey-era
//! baseline forward using population change, car permits, metro smart-card
//! volume, and two expert factors.

use ndarray::Array2;

use crate::error::{Error, Result};

/// The four transport modes, in canonical column order.
pub const MODES: [&str; 4] = ["mass-transit", "motorised", "active", "taxi"];

const MT: usize = 0;
const CAR: usize = 1;
const ACTIVE: usize = 2;
const TAXI: usize = 3;

/// Municipality-by-mode trip counts (daily averages). Columns always follow
/// [`MODES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSplit {
    municipalities: Vec<String>,
    counts: Array2<f64>,
}

impl ModeSplit {
    pub fn new(municipalities: Vec<String>, counts: Array2<f64>) -> Result<Self> {
        if counts.nrows() != municipalities.len() || counts.ncols() != MODES.len() {
            return Err(Error::DegenerateInput(format!(
                "mode split shape {:?} does not match {} municipalities x {} modes",
                counts.dim(),
                municipalities.len(),
                MODES.len()
            )));
        }
        if let Some(v) = counts.iter().find(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput(format!(
                "mode split contains non-finite entry {v}"
            )));
        }
        Ok(ModeSplit {
            municipalities,
            counts,
        })
    }

    /// Build from arbitrarily ordered mode columns, reordering them into
    /// canonical [`MODES`] order.
    pub fn from_labeled(
        municipalities: Vec<String>,
        mode_labels: &[String],
        counts: Array2<f64>,
    ) -> Result<Self> {
        if mode_labels.len() != MODES.len() {
            return Err(Error::DegenerateInput(format!(
                "expected {} mode columns, found {}",
                MODES.len(),
                mode_labels.len()
            )));
        }
        let mut reordered = Array2::zeros((counts.nrows(), MODES.len()));
        for (want_col, want) in MODES.iter().enumerate() {
            let have_col = mode_labels
                .iter()
                .position(|l| l == want)
                .ok_or_else(|| Error::UnknownMode(format!("missing mode column '{want}'")))?;
            reordered
                .column_mut(want_col)
                .assign(&counts.column(have_col));
        }
        ModeSplit::new(municipalities, reordered)
    }

    pub fn municipalities(&self) -> &[String] {
        &self.municipalities
    }

    pub fn counts(&self) -> &Array2<f64> {
        &self.counts
    }

    pub fn row_of(&self, municipality: &str) -> Option<usize> {
        self.municipalities.iter().position(|m| m == municipality)
    }

    /// One mode column by canonical name.
    pub fn mode_column(&self, mode: &str) -> Result<Vec<f64>> {
        let idx = MODES
            .iter()
            .position(|m| *m == mode)
            .ok_or_else(|| Error::UnknownMode(mode.to_string()))?;
        Ok(self.counts.column(idx).to_vec())
    }

    pub fn total(&self) -> f64 {
        self.counts.sum()
    }
}

/// One municipality's row in the official-statistics file.
#[derive(Debug, Clone, PartialEq)]
pub struct MunicipalityStats {
    pub name: String,
    pub pop_base: f64,
    pub pop_new: f64,
    pub permits_base: f64,
    pub permits_new: f64,
}

/// Official statistics for both reference years, plus the two expert
/// factors. The metro transaction counts are citywide scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct OfficialStats {
    pub municipalities: Vec<MunicipalityStats>,
    pub metro_base: f64,
    pub metro_new: f64,
    pub active_factor: f64,
    pub taxi_factor: f64,
}

impl OfficialStats {
    pub fn new(municipalities: Vec<MunicipalityStats>, metro_base: f64, metro_new: f64) -> Self {
        OfficialStats {
            municipalities,
            metro_base,
            metro_new,
            active_factor: 0.975,
            taxi_factor: 1.09,
        }
    }
}

/// Project the baseline split forward. Per municipality, with
/// `p = pop_new / pop_base`:
///
/// * mass-transit: `MT * p * sqrt(metro_new / metro_base)`
/// * motorised:    `C * p * sqrt(permits_new / permits_base)`
/// * active:       `A * p * active_factor`
/// * taxi:         `(T + 1) * p * taxi_factor`
///
/// The +1 keeps the projected taxi column strictly positive. A municipality
/// with zero permits in both years keeps its motorised count modulated by
/// population only (factor 1).
pub fn project_mode_split(base: &ModeSplit, stats: &OfficialStats) -> Result<ModeSplit> {
    if stats.metro_base <= 0.0 {
        return Err(Error::DegenerateInput(
            "project_mode_split: metro_base must be positive".into(),
        ));
    }
    let metro_factor = (stats.metro_new / stats.metro_base).sqrt();

    let mut municipalities = Vec::with_capacity(stats.municipalities.len());
    let mut counts = Array2::zeros((stats.municipalities.len(), MODES.len()));
    for (row, m) in stats.municipalities.iter().enumerate() {
        let base_row = base.row_of(&m.name).ok_or_else(|| {
            Error::UnknownMunicipality(format!("{} missing from base split", m.name))
        })?;
        if m.pop_base <= 0.0 {
            return Err(Error::DegenerateInput(format!(
                "project_mode_split: municipality '{}' has zero base population",
                m.name
            )));
        }
        let p = m.pop_new / m.pop_base;
        let permit_factor = if m.permits_base == 0.0 {
            if m.permits_new > 0.0 {
                return Err(Error::DegenerateInput(format!(
                    "project_mode_split: municipality '{}' has zero base permits but {} new permits",
                    m.name, m.permits_new
                )));
            }
            1.0
        } else {
            (m.permits_new / m.permits_base).sqrt()
        };

        let b = base.counts.row(base_row);
        counts[[row, MT]] = b[MT] * p * metro_factor;
        counts[[row, CAR]] = b[CAR] * p * permit_factor;
        counts[[row, ACTIVE]] = b[ACTIVE] * p * stats.active_factor;
        counts[[row, TAXI]] = (b[TAXI] + 1.0) * p * stats.taxi_factor;
        municipalities.push(m.name.clone());
    }
    ModeSplit::new(municipalities, counts)
}

/// Ratio of the projected total against the naive projection that scales
/// every base row by its population ratio only.
pub fn naive_ratio(base: &ModeSplit, projected: &ModeSplit, stats: &OfficialStats) -> Result<f64> {
    let mut naive_total = 0.0;
    for m in &stats.municipalities {
        let base_row = base.row_of(&m.name).ok_or_else(|| {
            Error::UnknownMunicipality(format!("{} missing from base split", m.name))
        })?;
        if m.pop_base <= 0.0 {
            return Err(Error::DegenerateInput(format!(
                "naive_ratio: municipality '{}' has zero base population",
                m.name
            )));
        }
        let p = m.pop_new / m.pop_base;
        naive_total += base.counts.row(base_row).sum() * p;
    }
    if naive_total == 0.0 {
        return Err(Error::DegenerateInput(
            "naive_ratio: naive projection total is zero".into(),
        ));
    }
    Ok(projected.total() / naive_total)
}
