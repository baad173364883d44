//! Turns device-level network event streams into trips and into the
//! mobility-derived relation matrices: municipality x waypoint (TF-IDF
//! weighted), municipality x speed range, and waypoint x speed range.

use std::collections::HashMap;

use ndarray::Array2;

use crate::error::{Error, Result};

/// A billable network event: a device observed at a tower at a point in
/// time (seconds since epoch, local offset already applied).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEvent {
    pub device: String,
    pub tower: String,
    pub timestamp: i64,
}

/// A mobile phone tower with projected planar coordinates in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct Tower {
    pub id: String,
    pub x_m: f64,
    pub y_m: f64,
    pub municipality: String,
}

/// Tower registry with id lookup. Tower order defines the waypoint concept
/// labels; municipality order is first appearance.
#[derive(Debug, Clone, Default)]
pub struct TowerSet {
    towers: Vec<Tower>,
    index: HashMap<String, usize>,
    municipalities: Vec<String>,
    muni_index: HashMap<String, usize>,
}

impl TowerSet {
    pub fn new(towers: Vec<Tower>) -> Result<Self> {
        let mut set = TowerSet::default();
        for t in towers {
            if set.index.contains_key(&t.id) {
                return Err(Error::DegenerateInput(format!(
                    "duplicate tower id '{}'",
                    t.id
                )));
            }
            if !t.x_m.is_finite() || !t.y_m.is_finite() {
                return Err(Error::DegenerateInput(format!(
                    "tower '{}' has non-finite position",
                    t.id
                )));
            }
            if !set.muni_index.contains_key(&t.municipality) {
                set.muni_index
                    .insert(t.municipality.clone(), set.municipalities.len());
                set.municipalities.push(t.municipality.clone());
            }
            set.index.insert(t.id.clone(), set.towers.len());
            set.towers.push(t);
        }
        Ok(set)
    }

    pub fn get(&self, id: &str) -> Option<&Tower> {
        self.index.get(id).map(|&i| &self.towers[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn towers(&self) -> &[Tower] {
        &self.towers
    }

    pub fn municipalities(&self) -> &[String] {
        &self.municipalities
    }

    pub fn municipality_index(&self, name: &str) -> Option<usize> {
        self.muni_index.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.towers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.towers.is_empty()
    }
}

/// A device movement: origin and destination towers, every intermediary
/// tower as a waypoint, and the mean speed over straight-line leg
/// distances.
#[derive(Debug, Clone, PartialEq)]
pub struct Trip {
    pub device: String,
    pub origin: String,
    pub destination: String,
    pub waypoints: Vec<String>,
    pub start: i64,
    pub end: i64,
    pub mean_speed: f64,
}

/// Transitions faster than this encode part of a trip; slower ones are
/// dwells that break the chain.
pub const TRIP_PART_THRESHOLD_KMH: f64 = 0.5;

fn distance_m(a: &Tower, b: &Tower) -> f64 {
    (a.x_m - b.x_m).hypot(a.y_m - b.y_m)
}

/// Chain consecutive above-threshold transitions into trips.
///
/// Events must arrive sorted by (device, timestamp) with duplicate
/// timestamps per device removed upstream. Each consecutive pair with
/// straight-line speed above [`TRIP_PART_THRESHOLD_KMH`] is a trip part;
/// maximal runs of adjacent parts form one trip. Parts at or below the
/// threshold break chains and are discarded.
pub fn extract_trips(events: &[NetworkEvent], towers: &TowerSet) -> Result<Vec<Trip>> {
    let mut trips = Vec::new();
    let mut i = 0;
    while i < events.len() {
        let device = &events[i].device;
        let mut j = i;
        while j < events.len() && &events[j].device == device {
            j += 1;
        }
        extract_device_trips(&events[i..j], towers, &mut trips)?;
        i = j;
    }
    Ok(trips)
}

fn extract_device_trips(
    events: &[NetworkEvent],
    towers: &TowerSet,
    out: &mut Vec<Trip>,
) -> Result<()> {
    // chain state: indices into `events` of the current run, plus summed
    // leg distance
    let mut chain_start: Option<usize> = None;
    let mut chain_end = 0;
    let mut chain_dist = 0.0;

    let flush = |start: Option<usize>, end: usize, dist: f64, out: &mut Vec<Trip>| {
        if let Some(s) = start {
            let span = &events[s..=end];
            let dt_h = (span[span.len() - 1].timestamp - span[0].timestamp) as f64 / 3600.0;
            out.push(Trip {
                device: span[0].device.clone(),
                origin: span[0].tower.clone(),
                destination: span[span.len() - 1].tower.clone(),
                waypoints: span.iter().map(|e| e.tower.clone()).collect(),
                start: span[0].timestamp,
                end: span[span.len() - 1].timestamp,
                mean_speed: (dist / 1000.0) / dt_h,
            });
        }
    };

    for w in 0..events.len().saturating_sub(1) {
        let (a, b) = (&events[w], &events[w + 1]);
        let ta = towers.get(&a.tower).ok_or_else(|| Error::UnknownTower {
            device: a.device.clone(),
            tower: a.tower.clone(),
        })?;
        let tb = towers.get(&b.tower).ok_or_else(|| Error::UnknownTower {
            device: b.device.clone(),
            tower: b.tower.clone(),
        })?;
        if b.timestamp <= a.timestamp {
            return Err(Error::UnsortedEvents {
                device: a.device.clone(),
            });
        }
        let dist = distance_m(ta, tb);
        let dt_h = (b.timestamp - a.timestamp) as f64 / 3600.0;
        let speed_kmh = (dist / 1000.0) / dt_h;

        if speed_kmh > TRIP_PART_THRESHOLD_KMH {
            if chain_start.is_none() {
                chain_start = Some(w);
                chain_dist = 0.0;
            }
            chain_end = w + 1;
            chain_dist += dist;
        } else {
            flush(chain_start.take(), chain_end, chain_dist, out);
        }
    }
    flush(chain_start.take(), chain_end, chain_dist, out);
    // the last event of the slice also validates its tower even when it
    // never paired (single-event devices)
    if events.len() == 1 {
        let e = &events[0];
        if towers.get(&e.tower).is_none() {
            return Err(Error::UnknownTower {
                device: e.device.clone(),
                tower: e.tower.clone(),
            });
        }
    }
    Ok(())
}

/// Speed and time-of-day gates applied after extraction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FilterParams {
    pub speed_min_kmh: f64,
    pub speed_max_kmh: f64,
    /// seconds after local midnight, inclusive
    pub window_start_s: i64,
    /// seconds after local midnight, exclusive
    pub window_end_s: i64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            speed_min_kmh: 5.0,
            speed_max_kmh: 120.0,
            window_start_s: 6 * 3600,
            window_end_s: 9 * 3600,
        }
    }
}

/// Keep trips with mean speed inside the closed band and a start time
/// inside the morning window. Trips are assigned to the window by start
/// time.
pub fn filter_trips(trips: Vec<Trip>, params: &FilterParams) -> Vec<Trip> {
    trips
        .into_iter()
        .filter(|t| {
            let tod = t.start.rem_euclid(86_400);
            t.mean_speed >= params.speed_min_kmh
                && t.mean_speed <= params.speed_max_kmh
                && tod >= params.window_start_s
                && tod < params.window_end_s
        })
        .collect()
}

/// Raw municipality x waypoint counts: cell (m, w) accumulates one count
/// per waypoint occurrence of tower w over trips whose origin tower lies
/// in municipality m (origin municipality as home proxy during the morning
/// window).
pub fn build_municipality_waypoint(trips: &[Trip], towers: &TowerSet) -> Result<Array2<f64>> {
    let mut counts = Array2::zeros((towers.municipalities().len(), towers.len()));
    for trip in trips {
        let origin = towers.get(&trip.origin).ok_or_else(|| Error::UnknownTower {
            device: trip.device.clone(),
            tower: trip.origin.clone(),
        })?;
        let row = towers
            .municipality_index(&origin.municipality)
            .expect("origin municipality is registered");
        for wp in &trip.waypoints {
            let col = towers.index_of(wp).ok_or_else(|| Error::UnknownTower {
                device: trip.device.clone(),
                tower: wp.clone(),
            })?;
            counts[[row, col]] += 1.0;
        }
    }
    Ok(counts)
}

/// TF-IDF weighting with smoothed idf:
/// `w(m, t) = (c(m, t) / sum_t c(m, t)) * ln(1 + n_rows / df_t)`,
/// where `df_t` is the number of rows with a positive count in column t.
/// Rows with zero sum stay zero.
pub fn tfidf(counts: &Array2<f64>) -> Array2<f64> {
    let (n_rows, n_cols) = counts.dim();
    let df: Vec<usize> = (0..n_cols)
        .map(|col| counts.column(col).iter().filter(|v| **v > 0.0).count())
        .collect();
    let mut out = Array2::zeros((n_rows, n_cols));
    for row in 0..n_rows {
        let row_sum: f64 = counts.row(row).sum();
        if row_sum == 0.0 {
            continue;
        }
        for col in 0..n_cols {
            let c = counts[[row, col]];
            if c > 0.0 {
                let idf = (1.0 + n_rows as f64 / df[col] as f64).ln();
                out[[row, col]] = (c / row_sum) * idf;
            }
        }
    }
    out
}

/// Eight contiguous half-open speed intervals `(lo, hi]` covering
/// (0, 120] km/h.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedRangeScheme {
    edges: Vec<f64>,
}

pub const SPEED_BIN_COUNT: usize = 8;

impl SpeedRangeScheme {
    /// Build from 9 strictly increasing bin edges starting at 0 and ending
    /// at 120.
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() != SPEED_BIN_COUNT + 1 {
            return Err(Error::BadSpeedScheme(format!(
                "expected {} edges, found {}",
                SPEED_BIN_COUNT + 1,
                edges.len()
            )));
        }
        if edges[0] != 0.0 || edges[SPEED_BIN_COUNT] != 120.0 {
            return Err(Error::BadSpeedScheme(
                "bins must cover (0, 120] km/h".into(),
            ));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadSpeedScheme(
                "edges must be strictly increasing".into(),
            ));
        }
        Ok(SpeedRangeScheme { edges })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Bin index of a speed inside the covered range.
    pub fn bin_of(&self, speed_kmh: f64) -> Result<usize> {
        if !(speed_kmh > self.edges[0] && speed_kmh <= self.edges[SPEED_BIN_COUNT]) {
            return Err(Error::SpeedOutOfScheme(speed_kmh));
        }
        let bin = self
            .edges
            .windows(2)
            .position(|w| speed_kmh > w[0] && speed_kmh <= w[1])
            .expect("speed inside coverage");
        Ok(bin)
    }

    /// Labels like "0-5", "30-60", used as the speed concept labels.
    pub fn labels(&self) -> Vec<String> {
        self.edges
            .windows(2)
            .map(|w| format!("{}-{}", trim_float(w[0]), trim_float(w[1])))
            .collect()
    }
}

fn trim_float(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

impl Default for SpeedRangeScheme {
    fn default() -> Self {
        SpeedRangeScheme::from_edges(vec![0.0, 5.0, 10.0, 20.0, 30.0, 60.0, 80.0, 100.0, 120.0])
            .expect("default scheme is valid")
    }
}

/// Count filtered trips into (municipality x speed range) and
/// (waypoint x speed range) matrices. Each trip contributes exactly one
/// count to the first and one count per waypoint occurrence to the second.
pub fn build_speed_matrices(
    trips: &[Trip],
    towers: &TowerSet,
    scheme: &SpeedRangeScheme,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let mut by_muni = Array2::zeros((towers.municipalities().len(), SPEED_BIN_COUNT));
    let mut by_waypoint = Array2::zeros((towers.len(), SPEED_BIN_COUNT));
    for trip in trips {
        let bin = scheme.bin_of(trip.mean_speed)?;
        let origin = towers.get(&trip.origin).ok_or_else(|| Error::UnknownTower {
            device: trip.device.clone(),
            tower: trip.origin.clone(),
        })?;
        let row = towers
            .municipality_index(&origin.municipality)
            .expect("origin municipality is registered");
        by_muni[[row, bin]] += 1.0;
        for wp in &trip.waypoints {
            let widx = towers.index_of(wp).ok_or_else(|| Error::UnknownTower {
                device: trip.device.clone(),
                tower: wp.clone(),
            })?;
            by_waypoint[[widx, bin]] += 1.0;
        }
    }
    Ok((by_muni, by_waypoint))
}
