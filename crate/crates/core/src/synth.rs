//! Fully synthetic city generator: municipalities, towers, devices, event
//! streams, app usage, official statistics, and all fourteen relations,
//! with a planted ground-truth updated mode split. The generator is
//! deliberately minimal (straight-line trips, lognormal speeds); it exists
//! to exercise the pipeline's math end to end, not to model a real city.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use crate::appusage::mode_labels;
use crate::error::{Error, Result};
use crate::fusion::DataConfiguration;
use crate::graph::Provenance;
use crate::ingest::{NetworkEvent, SpeedRangeScheme, Tower, SPEED_BIN_COUNT};
use crate::io::config::{PipelineManifest, RunSettings, ValidationSettings};
use crate::io::files::{self, ManifestEntry, UsageRow};
use crate::io::matrix::write_matrix;
use crate::priors::{self, ModeSplit, MunicipalityStats, OfficialStats, MODES};

/// Parameters of one synthetic city.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub n_municipalities: usize,
    pub n_towers: usize,
    pub n_devices: usize,
    pub n_apps: usize,
    pub n_days: usize,
    pub planted_split: ModeSplit,
    pub noise_level: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// A spec with a profile-structured planted split sized for the device
    /// budget.
    pub fn with_defaults(
        n_municipalities: usize,
        n_towers: usize,
        n_devices: usize,
        n_apps: usize,
        n_days: usize,
        noise_level: f64,
        seed: u64,
    ) -> Result<Self> {
        let planted_split = default_planted_split(n_municipalities, seed)?;
        let spec = SyntheticSpec {
            n_municipalities,
            n_towers,
            n_devices,
            n_apps,
            n_days,
            planted_split,
            noise_level,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_municipalities == 0 {
            return Err(Error::InfeasibleSpec("no municipalities".into()));
        }
        if self.n_towers < self.n_municipalities {
            return Err(Error::InfeasibleSpec(format!(
                "{} towers cannot cover {} municipalities",
                self.n_towers, self.n_municipalities
            )));
        }
        if self.n_apps < 8 {
            return Err(Error::InfeasibleSpec(
                "need at least 8 app domains".into(),
            ));
        }
        if self.n_days == 0 || self.n_devices == 0 {
            return Err(Error::InfeasibleSpec("need devices and days".into()));
        }
        if self.planted_split.municipalities().len() != self.n_municipalities {
            return Err(Error::InfeasibleSpec(format!(
                "planted split has {} rows for {} municipalities",
                self.planted_split.municipalities().len(),
                self.n_municipalities
            )));
        }
        if self.planted_split.total() <= 0.0 {
            return Err(Error::InfeasibleSpec("planted split has zero total".into()));
        }
        if self.noise_level < 0.0 {
            return Err(Error::InfeasibleSpec("negative noise level".into()));
        }
        Ok(())
    }
}

/// The ground-truth split the generator plants.
pub fn planted_truth(spec: &SyntheticSpec) -> &ModeSplit {
    &spec.planted_split
}

/// Three latent municipality profiles; every municipality follows one.
/// The planted split, demographics, infrastructure, and app usage all
/// derive from the same profile assignment, which is what lets the fusion
/// recover structure the noisy prior lost.
const PROFILE_SHARES: [[f64; 4]; 3] = [
    [0.52, 0.26, 0.16, 0.06], // transit-heavy
    [0.24, 0.55, 0.12, 0.09], // car-heavy
    [0.36, 0.30, 0.21, 0.13], // mixed, more active/taxi
];

const PROFILE_INCOME: [[f64; 5]; 3] = [
    [0.25, 0.25, 0.20, 0.18, 0.12],
    [0.08, 0.12, 0.20, 0.28, 0.32],
    [0.30, 0.26, 0.20, 0.14, 0.10],
];

const N_WORK: usize = 10;
const N_MIGRATION: usize = 12;
const N_AGE_BANDS: usize = 11;
const N_INFRA: usize = 7;

const INFRA_LABELS: [&str; N_INFRA] = [
    "highway",
    "primary",
    "secondary",
    "tertiary",
    "rail_metro",
    "cycleway",
    "pedestrian",
];

const MACRO_AREAS: [&str; 5] = ["Center", "North", "East", "West", "South"];

/// municipality tile edge in metres; sized so that overnight gaps between
/// a device's trips always fall below the 0.5 km/h trip-part threshold
const TILE_M: f64 = 1500.0;
/// destination municipalities are drawn within this centre-to-centre
/// radius of home, bounding overnight displacement
const NEIGHBOR_RADIUS_M: f64 = 6000.0;

fn profile_of(muni: usize) -> usize {
    muni % PROFILE_SHARES.len()
}

/// Profile-structured planted split: per-municipality totals near
/// 1200 trips with mild size spread and +-2% cell jitter, so the truth is
/// approximately rank three.
pub fn default_planted_split(n_municipalities: usize, seed: u64) -> Result<ModeSplit> {
    if n_municipalities == 0 {
        return Err(Error::InfeasibleSpec("no municipalities".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut counts = Array2::zeros((n_municipalities, MODES.len()));
    let mut names = Vec::with_capacity(n_municipalities);
    for m in 0..n_municipalities {
        let size = 1200.0 * rng.random_range(0.90..1.10);
        let shares = PROFILE_SHARES[profile_of(m)];
        for mode in 0..MODES.len() {
            let jitter = 1.0 + rng.random_range(-0.02..0.02);
            counts[[m, mode]] = size * shares[mode] * jitter;
        }
        names.push(format!("M{m:02}"));
    }
    ModeSplit::new(names, counts)
}

/// What `generate` wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub trips_planned: usize,
    pub n_events: usize,
    pub n_usage_rows: usize,
    pub pipeline_manifest: PathBuf,
}

/// One intended trip in the generator's ledger.
#[derive(Debug, Clone)]
struct LedgerTrip {
    device: usize,
    day: usize,
    municipality: usize,
    mode: usize,
    route: Vec<usize>,
    speed_kmh: f64,
}

struct Generator<'a> {
    spec: &'a SyntheticSpec,
    rng: ChaCha8Rng,
    towers: Vec<Tower>,
    /// tower indices per municipality: all, rail subset, highway subset
    muni_towers: Vec<Vec<usize>>,
    rail_towers: Vec<Vec<usize>>,
    highway_towers: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl<'a> Generator<'a> {
    fn new(spec: &'a SyntheticSpec) -> Self {
        Generator {
            spec,
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            towers: Vec::new(),
            muni_towers: vec![Vec::new(); spec.n_municipalities],
            rail_towers: vec![Vec::new(); spec.n_municipalities],
            highway_towers: vec![Vec::new(); spec.n_municipalities],
            neighbors: Vec::new(),
        }
    }

    fn grid_cols(&self) -> usize {
        (self.spec.n_municipalities as f64).sqrt().ceil() as usize
    }

    fn muni_origin(&self, m: usize) -> (f64, f64) {
        let cols = self.grid_cols();
        ((m % cols) as f64 * TILE_M, (m / cols) as f64 * TILE_M)
    }

    fn muni_center(&self, m: usize) -> (f64, f64) {
        let (x, y) = self.muni_origin(m);
        (x + TILE_M / 2.0, y + TILE_M / 2.0)
    }

    fn place_towers(&mut self) {
        let n_muni = self.spec.n_municipalities;
        for t in 0..self.spec.n_towers {
            let m = t % n_muni;
            let (ox, oy) = self.muni_origin(m);
            let x = ox + self.rng.random_range(0.0..TILE_M);
            let y = oy + self.rng.random_range(0.0..TILE_M);
            self.muni_towers[m].push(t);
            self.towers.push(Tower {
                id: format!("T{t:04}"),
                x_m: x,
                y_m: y,
                municipality: format!("M{m:02}"),
            });
        }
        for m in 0..n_muni {
            let list = &self.muni_towers[m];
            let n_special = (list.len() / 8).clamp(1, 3).min(list.len());
            self.rail_towers[m] = list[..n_special].to_vec();
            self.highway_towers[m] = if list.len() > n_special {
                list[n_special..(2 * n_special).min(list.len())].to_vec()
            } else {
                list.clone()
            };
        }
        self.neighbors = (0..n_muni)
            .map(|m| {
                let (cx, cy) = self.muni_center(m);
                (0..n_muni)
                    .filter(|&other| {
                        let (ox, oy) = self.muni_center(other);
                        (cx - ox).hypot(cy - oy) <= NEIGHBOR_RADIUS_M
                    })
                    .collect()
            })
            .collect();
    }

    fn pick(&mut self, list: &[usize]) -> usize {
        list[self.rng.random_range(0..list.len())]
    }

    /// Mode-specific target speed in km/h, safely inside the 5-120 filter
    /// band after timestamp rounding.
    fn draw_speed(&mut self, mode: usize) -> f64 {
        let (mu, sigma, lo, hi) = match mode {
            0 => (22.0, 0.22, 8.0, 60.0),   // mass-transit
            1 => (36.0, 0.25, 10.0, 110.0), // motorised
            2 => (8.0, 0.18, 5.5, 13.0),    // active
            _ => (30.0, 0.25, 9.0, 100.0),  // taxi
        };
        let dist = LogNormal::new(mu.ln(), sigma).expect("valid lognormal");
        dist.sample(&mut self.rng).clamp(lo, hi)
    }

    /// A route for one trip: home tower, mode-typical intermediaries, and
    /// a destination inside the neighbour radius. Consecutive duplicates
    /// are collapsed so every leg has positive distance.
    fn draw_route(&mut self, home_tower: usize, muni: usize, mode: usize) -> Vec<usize> {
        let mut route = vec![home_tower];
        match mode {
            0 => {
                // mass-transit rides the rail towers
                let own = self.rail_towers[muni].clone();
                route.push(self.pick(&own));
                let dest_muni = self.pick(&self.neighbors[muni].clone());
                let dest_rail = self.rail_towers[dest_muni].clone();
                route.push(self.pick(&dest_rail));
                let dest_all = self.muni_towers[dest_muni].clone();
                route.push(self.pick(&dest_all));
            }
            2 => {
                // active trips stay local
                let own = self.muni_towers[muni].clone();
                route.push(self.pick(&own));
                route.push(self.pick(&own));
            }
            _ => {
                // motorised and taxi ride the highway towers
                let own = self.highway_towers[muni].clone();
                route.push(self.pick(&own));
                let dest_muni = self.pick(&self.neighbors[muni].clone());
                let dest_hw = self.highway_towers[dest_muni].clone();
                route.push(self.pick(&dest_hw));
                let dest_all = self.muni_towers[dest_muni].clone();
                route.push(self.pick(&dest_all));
            }
        }
        route.dedup();
        if route.len() < 2 {
            // single-tower municipality corner case: bounce to any
            // neighbour tower
            let dest_muni = self.pick(&self.neighbors[muni].clone());
            for candidate in &self.muni_towers[dest_muni] {
                if *candidate != home_tower {
                    route.push(*candidate);
                    break;
                }
            }
        }
        route
    }

    fn tower_distance(&self, a: usize, b: usize) -> f64 {
        let (ta, tb) = (&self.towers[a], &self.towers[b]);
        (ta.x_m - tb.x_m).hypot(ta.y_m - tb.y_m)
    }

    /// Emit the event chain of one trip and return its realized mean
    /// speed (after integer-second rounding).
    fn emit_trip_events(
        &mut self,
        device: usize,
        day: usize,
        route: &[usize],
        speed_kmh: f64,
        window_start_s: i64,
        events: &mut Vec<NetworkEvent>,
    ) -> f64 {
        let start_offset = self.rng.random_range(0..9000); // within 2.5 h
        let mut ts = day as i64 * 86_400 + window_start_s + start_offset;
        let device_id = format!("D{device:05}");
        events.push(NetworkEvent {
            device: device_id.clone(),
            tower: self.towers[route[0]].id.clone(),
            timestamp: ts,
        });
        let mut total_dist = 0.0;
        let t0 = ts;
        for leg in route.windows(2) {
            let dist = self.tower_distance(leg[0], leg[1]);
            let dt = ((dist * 3.6 / speed_kmh).round() as i64).max(1);
            ts += dt;
            total_dist += dist;
            events.push(NetworkEvent {
                device: device_id.clone(),
                tower: self.towers[leg[1]].id.clone(),
                timestamp: ts,
            });
        }
        (total_dist / 1000.0) / ((ts - t0) as f64 / 3600.0)
    }
}

/// Generate the whole city into `out_dir`: raw inputs, the nine directly
/// written relations, manifest, configs, macro areas, the truth file, and
/// the generator's trip ledger. The five mobility/app relations are left
/// to the ingest stage; their paths are pre-registered in the manifest.
pub fn generate(spec: &SyntheticSpec, out_dir: &Path) -> Result<SynthSummary> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut g = Generator::new(spec);
    g.place_towers();

    // --- trip plan ------------------------------------------------------
    let planted = &spec.planted_split;
    let budget = (0.88 * spec.n_devices as f64 * spec.n_days as f64).floor();
    let scale = (budget / planted.total()).min(1.0);
    let mut trips_per_cell = Array2::zeros((spec.n_municipalities, MODES.len()));
    for m in 0..spec.n_municipalities {
        for mode in 0..MODES.len() {
            trips_per_cell[[m, mode]] = (planted.counts()[[m, mode]] * scale).floor();
        }
    }
    let muni_trip_totals: Vec<usize> = (0..spec.n_municipalities)
        .map(|m| trips_per_cell.row(m).sum() as usize)
        .collect();
    let devices_needed: Vec<usize> = muni_trip_totals
        .iter()
        .map(|&t| t.div_ceil(spec.n_days))
        .collect();
    let total_needed: usize = devices_needed.iter().sum();
    if total_needed > spec.n_devices {
        return Err(Error::InfeasibleSpec(format!(
            "{total_needed} devices needed for the planted trips, only {} available",
            spec.n_devices
        )));
    }

    // device -> (municipality, home tower); trip devices first, then a
    // small noise pool
    let mut device_home = Vec::with_capacity(spec.n_devices);
    for (m, &need) in devices_needed.iter().enumerate() {
        for _ in 0..need {
            let home = g.pick(&g.muni_towers[m].clone());
            device_home.push((m, home));
        }
    }
    let n_trip_devices = device_home.len();
    let n_noise_devices = (spec.n_devices - n_trip_devices).min(200);
    for k in 0..n_noise_devices {
        let m = k % spec.n_municipalities;
        let home = g.pick(&g.muni_towers[m].clone());
        device_home.push((m, home));
    }

    // (device, day) slots per municipality, one trip each at most
    let mut slot_cursor = vec![0usize; spec.n_municipalities];
    let muni_device_ranges: Vec<(usize, usize)> = {
        let mut ranges = Vec::new();
        let mut start = 0;
        for &need in &devices_needed {
            ranges.push((start, start + need));
            start += need;
        }
        ranges
    };

    let window_start_s = 6 * 3600;
    let mut events: Vec<NetworkEvent> = Vec::new();
    let mut ledger: Vec<LedgerTrip> = Vec::new();

    for m in 0..spec.n_municipalities {
        let (dev_lo, dev_hi) = muni_device_ranges[m];
        let n_dev = dev_hi - dev_lo;
        for mode in 0..MODES.len() {
            let n_trips = trips_per_cell[[m, mode]] as usize;
            for _ in 0..n_trips {
                let slot = slot_cursor[m];
                slot_cursor[m] += 1;
                let device = dev_lo + slot % n_dev;
                let day = slot / n_dev;
                let home = device_home[device].1;
                let route = g.draw_route(home, m, mode);
                let speed = g.draw_speed(mode);
                let realized = g.emit_trip_events(
                    device,
                    day,
                    &route,
                    speed,
                    window_start_s,
                    &mut events,
                );
                ledger.push(LedgerTrip {
                    device,
                    day,
                    municipality: m,
                    mode,
                    route,
                    speed_kmh: realized,
                });
            }
        }
    }

    // noise devices: dwellers, sub-threshold crawls, slow/fast/late trips,
    // all of which the extractor or the filters must reject
    for k in 0..n_noise_devices {
        let device = n_trip_devices + k;
        let (m, home) = device_home[device];
        let device_id = format!("D{device:05}");
        match k % 5 {
            0 => {
                // stationary: 15-minute polling at the home tower
                for i in 0..6 {
                    events.push(NetworkEvent {
                        device: device_id.clone(),
                        tower: g.towers[home].id.clone(),
                        timestamp: 7 * 3600 + i * 900,
                    });
                }
            }
            1 => {
                // below the 0.5 km/h part threshold: no trip at all
                let other = g.pick(&g.muni_towers[m].clone());
                if other != home {
                    events.push(NetworkEvent {
                        device: device_id.clone(),
                        tower: g.towers[home].id.clone(),
                        timestamp: 7 * 3600,
                    });
                    let dist = g.tower_distance(home, other);
                    let dt = (dist * 3.6 / 0.4).round() as i64 + 1; // ~0.4 km/h
                    events.push(NetworkEvent {
                        device: device_id,
                        tower: g.towers[other].id.clone(),
                        timestamp: 7 * 3600 + dt,
                    });
                }
            }
            2 => {
                // walkable but under the 5 km/h filter
                let route = g.draw_route(home, m, 2);
                g.emit_trip_events(device, 0, &route, 3.0, window_start_s, &mut events);
            }
            3 => {
                // over the 120 km/h filter
                let route = g.draw_route(home, m, 1);
                g.emit_trip_events(device, 0, &route, 150.0, window_start_s, &mut events);
            }
            _ => {
                // fine speed, wrong time of day
                let route = g.draw_route(home, m, 1);
                g.emit_trip_events(device, 0, &route, 25.0, 11 * 3600, &mut events);
            }
        }
    }

    events.sort_by(|a, b| a.device.cmp(&b.device).then(a.timestamp.cmp(&b.timestamp)));

    // --- app usage -------------------------------------------------------
    // tower touches per mode, from the planted trips
    let mut touches = Array2::<f64>::zeros((spec.n_towers, MODES.len()));
    for trip in &ledger {
        for &t in &trip.route {
            touches[[t, trip.mode]] += 1.0;
        }
    }
    let usage_rows = build_usage(&mut g, spec, &touches)?;

    // --- official stats and the prior -----------------------------------
    let (stats, base_split) = back_solve_stats(&mut g, spec)?;
    let prior = priors::project_mode_split(&base_split, &stats)?;

    // --- relations -------------------------------------------------------
    let muni_labels: Vec<String> = planted.municipalities().to_vec();
    let scheme = SpeedRangeScheme::default();

    let pop_matrix = demographic_matrix(&mut g, &stats, DemographicKind::Population);
    let work_matrix = demographic_matrix(&mut g, &stats, DemographicKind::Work);
    let migration_matrix = demographic_matrix(&mut g, &stats, DemographicKind::Migration);
    let income_matrix = demographic_matrix(&mut g, &stats, DemographicKind::Income);

    let r11 = income_mode_fractions(&income_matrix, planted);
    let r12 = speed_mode_fractions(&ledger, &scheme)?;
    let r10 = infrastructure_flags(&mut g);
    let r14 = infrastructure_mode_flags();

    let write_rel = |name: &str, rows: &[String], cols: &[String], m: &Array2<f64>| -> Result<()> {
        write_matrix(&out_dir.join(format!("{name}.csv")), rows, cols, m)
    };

    let modes = mode_labels();
    let tower_labels: Vec<String> = g.towers.iter().map(|t| t.id.clone()).collect();
    let speed_labels = scheme.labels();
    let work_labels: Vec<String> = (0..N_WORK).map(|i| format!("work{i:02}")).collect();
    let migration_labels: Vec<String> =
        (0..N_MIGRATION).map(|i| format!("country{i:02}")).collect();
    let pop_labels: Vec<String> = (0..2 * N_AGE_BANDS)
        .map(|i| {
            let year = if i < N_AGE_BANDS { "base" } else { "new" };
            format!("{year}_age{:02}", i % N_AGE_BANDS)
        })
        .collect();
    let income_labels: Vec<String> = (1..=5).map(|i| format!("Q{i:02}")).collect();
    let infra_labels: Vec<String> = INFRA_LABELS.iter().map(|s| s.to_string()).collect();

    write_rel("R01", &muni_labels, &modes, prior.counts())?;
    write_rel("R02", &muni_labels, &work_labels, &work_matrix)?;
    write_rel("R03", &muni_labels, &migration_labels, &migration_matrix)?;
    write_rel("R04", &muni_labels, &pop_labels, &pop_matrix)?;
    write_rel("R06", &muni_labels, &income_labels, &income_matrix)?;
    write_rel("R10", &tower_labels, &infra_labels, &r10)?;
    write_rel("R11", &income_labels, &modes, &r11)?;
    write_rel("R12", &speed_labels, &modes, &r12)?;
    write_rel("R14", &infra_labels, &modes, &r14)?;

    // --- manifest --------------------------------------------------------
    let entry = |id: &str, source: &str, target: &str, provenance: Provenance| ManifestEntry {
        id: id.to_string(),
        source_concept: source.to_string(),
        target_concept: target.to_string(),
        path: PathBuf::from(format!("{id}.csv")),
        provenance,
    };
    let manifest_entries = vec![
        entry("R01", "municipality", "mode", Provenance::Derived),
        entry("R02", "municipality", "work", Provenance::Census),
        entry("R03", "municipality", "migration", Provenance::Census),
        entry("R04", "municipality", "population", Provenance::Census),
        entry("R05", "municipality", "waypoint", Provenance::Mobile),
        entry("R06", "municipality", "income", Provenance::Census),
        entry("R07", "municipality", "speed", Provenance::Mobile),
        entry("R08", "waypoint", "speed", Provenance::Mobile),
        entry("R09", "waypoint", "app", Provenance::Mobile),
        entry("R10", "waypoint", "infrastructure", Provenance::Derived),
        entry("R11", "income", "mode", Provenance::Survey),
        entry("R12", "speed", "mode", Provenance::Survey),
        entry("R13", "app", "mode", Provenance::Manual),
        entry("R14", "infrastructure", "mode", Provenance::Manual),
    ];
    files::write_manifest(&out_dir.join("relations.csv"), &manifest_entries)?;

    // --- raw inputs ------------------------------------------------------
    files::write_events(&out_dir.join("events.csv"), &events)?;
    files::write_towers(&out_dir.join("towers.csv"), &g.towers)?;
    files::write_usage(&out_dir.join("usage.csv"), &usage_rows)?;
    files::write_associations(
        &out_dir.join("association.csv"),
        &[
            ("ridehail0.net".into(), vec!["taxi".into()]),
            ("ridehail1.net".into(), vec!["taxi".into()]),
            ("transitapp.net".into(), vec!["mass-transit".into()]),
            ("carnav.net".into(), vec!["motorised".into(), "taxi".into()]),
            ("argame.net".into(), vec!["active".into()]),
        ],
    )?;
    files::write_lines(
        &out_dir.join("exclusion.txt"),
        &["spyware0.net".to_string(), "adtrack0.net".to_string()],
    )?;
    files::write_stats(&out_dir.join("stats.csv"), &stats)?;
    files::write_mode_split(&out_dir.join("base_split.csv"), &base_split)?;
    files::write_speed_scheme(&out_dir.join("speed_scheme.txt"), &scheme)?;

    let macro_map: BTreeMap<String, String> = muni_labels
        .iter()
        .enumerate()
        .map(|(m, name)| (name.clone(), MACRO_AREAS[m % MACRO_AREAS.len()].to_string()))
        .collect();
    files::write_macro_areas(&out_dir.join("macro_areas.csv"), &macro_map)?;

    files::write_mode_split(&out_dir.join("truth.csv"), planted)?;
    write_ledger(&out_dir.join("ledger.csv"), &ledger, &g)?;

    // --- configs ---------------------------------------------------------
    let run_settings = RunSettings {
        n_instances: 20,
        base_seed: 1,
        ingest: crate::io::config::IngestSettings {
            speed_scheme: Some(PathBuf::from("speed_scheme.txt")),
            ..Default::default()
        },
        validation: ValidationSettings {
            macro_areas: Some(PathBuf::from("macro_areas.csv")),
            reference_split: Some(PathBuf::from("truth.csv")),
        },
        data_configuration: DataConfiguration::All,
        ..Default::default()
    };
    run_settings.save(&out_dir.join("run_config.toml"))?;

    let manifest = PipelineManifest {
        relations: PathBuf::from("relations.csv"),
        events: PathBuf::from("events.csv"),
        towers: PathBuf::from("towers.csv"),
        usage: PathBuf::from("usage.csv"),
        association: PathBuf::from("association.csv"),
        exclusion: PathBuf::from("exclusion.txt"),
        stats: PathBuf::from("stats.csv"),
        base_split: Some(PathBuf::from("base_split.csv")),
        run_config: PathBuf::from("run_config.toml"),
        out_dir: PathBuf::from("out"),
    };
    let manifest_path = out_dir.join("pipeline.toml");
    manifest.save(&manifest_path)?;

    Ok(SynthSummary {
        trips_planned: ledger.len(),
        n_events: events.len(),
        n_usage_rows: usage_rows.len(),
        pipeline_manifest: manifest_path,
    })
}

fn write_ledger(path: &Path, ledger: &[LedgerTrip], g: &Generator<'_>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    w.write_record([
        "device",
        "day",
        "municipality",
        "mode",
        "origin",
        "destination",
        "mean_speed_kmh",
        "n_waypoints",
    ])
    .map_err(|e| Error::parse(path, e.to_string()))?;
    for t in ledger {
        w.write_record([
            format!("D{:05}", t.device),
            t.day.to_string(),
            format!("M{:02}", t.municipality),
            MODES[t.mode].to_string(),
            g.towers[t.route[0]].id.clone(),
            g.towers[*t.route.last().expect("route has towers")].id.clone(),
            format!("{}", t.speed_kmh),
            t.route.len().to_string(),
        ])
        .map_err(|e| Error::parse(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Long-format DPI usage: five mode-associated apps driven by the tower
/// touches of their modes, background apps driven by total traffic, two
/// single-tower apps for the entropy filter to drop, two domains for the
/// exclusion list, and subdomain variants to exercise unification.
fn build_usage(
    g: &mut Generator<'_>,
    spec: &SyntheticSpec,
    touches: &Array2<f64>,
) -> Result<Vec<UsageRow>> {
    let n_towers = spec.n_towers;
    let total_touch: Vec<f64> = (0..n_towers).map(|t| touches.row(t).sum()).collect();
    let mut rows: Vec<UsageRow> = Vec::new();
    let push = |tower: usize, domain: String, count: f64, rows: &mut Vec<UsageRow>| {
        if count > 0.0 {
            rows.push(UsageRow {
                tower: format!("T{tower:04}"),
                domain,
                count,
            });
        }
    };

    // (domain, weight per mode touch)
    let special: [(&str, [f64; 4]); 5] = [
        ("ridehail0.net", [0.0, 0.0, 0.0, 2.0]),
        ("ridehail1.net", [0.0, 0.0, 0.0, 1.5]),
        ("transitapp.net", [2.0, 0.0, 0.0, 0.0]),
        ("carnav.net", [0.0, 1.5, 0.0, 1.0]),
        ("argame.net", [0.0, 0.0, 2.0, 0.0]),
    ];
    for (domain, weights) in special {
        for t in 0..n_towers {
            let signal: f64 = (0..MODES.len())
                .map(|mode| weights[mode] * touches[[t, mode]])
                .sum();
            let noise = g.rng.random_range(0..3) as f64;
            push(t, domain.to_string(), (signal).round() + noise, &mut rows);
        }
    }

    // background apps track overall traffic; the first three are emitted
    // as api./cdn. subdomain pairs
    let n_background = spec.n_apps.saturating_sub(7);
    for a in 0..n_background {
        let domain = format!("app{a:02}.net");
        for (t, &touch) in total_touch.iter().enumerate() {
            let count =
                (touch * g.rng.random_range(0.3..0.9)).round() + g.rng.random_range(0..4) as f64;
            if count <= 0.0 {
                continue;
            }
            if a < 3 {
                let api = (count / 2.0).floor();
                let cdn = count - api;
                push(t, format!("api.{domain}"), api, &mut rows);
                push(t, format!("cdn.{domain}"), cdn, &mut rows);
            } else {
                push(t, domain.clone(), count, &mut rows);
            }
        }
    }

    // entropy-filter fodder: all usage at a single tower
    let kiosk0 = g.rng.random_range(0..n_towers);
    let kiosk1 = g.rng.random_range(0..n_towers);
    push(kiosk0, "kiosk0.net".into(), 40.0, &mut rows);
    push(kiosk1, "kiosk1.net".into(), 60.0, &mut rows);

    // exclusion-list fodder
    for t in 0..n_towers.min(30) {
        push(t, "spyware0.net".into(), 5.0, &mut rows);
        push(t, "tracker.adtrack0.net".into(), 3.0, &mut rows);
    }
    Ok(rows)
}

/// Back-solve the official statistics so the projection reproduces the
/// planted split up to the configured relative perturbation.
fn back_solve_stats(
    g: &mut Generator<'_>,
    spec: &SyntheticSpec,
) -> Result<(OfficialStats, ModeSplit)> {
    let planted = &spec.planted_split;
    let metro_base = 2_000_000.0;
    let metro_new = 1_126_000.0; // a 43.7% reduction
    let metro_factor = (metro_new / metro_base).sqrt();

    let mut rows = Vec::with_capacity(spec.n_municipalities);
    let mut base_counts = Array2::zeros((spec.n_municipalities, MODES.len()));
    for (m, name) in planted.municipalities().iter().enumerate() {
        // population tracks the municipality's trip volume, so the
        // demographic relations and the mode split agree on relative
        // municipality sizes
        let trip_total: f64 = planted.counts().row(m).sum();
        let pop_base = (trip_total * g.rng.random_range(2.4..2.6)).round();
        let pop_new = (pop_base * g.rng.random_range(0.95..1.25)).round();
        let permits_base = g.rng.random_range(800.0..2500.0_f64).round();
        let permits_new = (permits_base * g.rng.random_range(0.9..1.8)).round();
        let p = pop_new / pop_base;
        let permit_factor = (permits_new / permits_base).sqrt();

        let noisy = |g: &mut Generator<'_>, v: f64| {
            if spec.noise_level > 0.0 {
                v * (1.0 + g.rng.random_range(-spec.noise_level..spec.noise_level))
            } else {
                v
            }
        };
        let target_mt = noisy(g, planted.counts()[[m, 0]]);
        let target_car = noisy(g, planted.counts()[[m, 1]]);
        let target_act = noisy(g, planted.counts()[[m, 2]]);
        let target_taxi = noisy(g, planted.counts()[[m, 3]]);

        base_counts[[m, 0]] = target_mt / (p * metro_factor);
        base_counts[[m, 1]] = target_car / (p * permit_factor);
        base_counts[[m, 2]] = target_act / (p * 0.975);
        let taxi_base = target_taxi / (p * 1.09) - 1.0;
        if taxi_base < 0.0 {
            return Err(Error::InfeasibleSpec(format!(
                "municipality {name}: planted taxi count too small to back-solve"
            )));
        }
        base_counts[[m, 3]] = taxi_base;

        rows.push(MunicipalityStats {
            name: name.clone(),
            pop_base,
            pop_new,
            permits_base,
            permits_new,
        });
    }
    let stats = OfficialStats::new(rows, metro_base, metro_new);
    let base_split = ModeSplit::new(planted.municipalities().to_vec(), base_counts)?;
    Ok((stats, base_split))
}

enum DemographicKind {
    Population,
    Work,
    Migration,
    Income,
}

/// Profile-driven demographic matrices at population scale, with 5% cell
/// jitter. These anchor the municipality factor on the profile structure.
fn demographic_matrix(
    g: &mut Generator<'_>,
    stats: &OfficialStats,
    kind: DemographicKind,
) -> Array2<f64> {
    let n_muni = stats.municipalities.len();
    let n_cols = match kind {
        DemographicKind::Population => 2 * N_AGE_BANDS,
        DemographicKind::Work => N_WORK,
        DemographicKind::Migration => N_MIGRATION,
        DemographicKind::Income => 5,
    };
    let mut out = Array2::zeros((n_muni, n_cols));
    for m in 0..n_muni {
        let profile = profile_of(m);
        let muni = &stats.municipalities[m];
        for c in 0..n_cols {
            let (weight, scale) = match kind {
                DemographicKind::Population => {
                    let band = c % N_AGE_BANDS;
                    let w = age_weight(profile, band);
                    let pop = if c < N_AGE_BANDS { muni.pop_base } else { muni.pop_new };
                    (w, pop)
                }
                DemographicKind::Work => (ramp_weight(profile, c, N_WORK), muni.pop_new * 0.5),
                DemographicKind::Migration => {
                    (ramp_weight(profile, c, N_MIGRATION), muni.pop_new * 0.12)
                }
                DemographicKind::Income => (PROFILE_INCOME[profile][c], muni.pop_new),
            };
            let jitter = 1.0 + g.rng.random_range(-0.05..0.05);
            out[[m, c]] = (weight * scale * jitter).max(0.0);
        }
    }
    out
}

/// Unimodal weight over `n` categories whose peak moves with the profile.
fn ramp_weight(profile: usize, col: usize, n: usize) -> f64 {
    let peak = (profile * (n - 1)) as f64 / 2.0;
    let spread = n as f64 / 2.5;
    let d = (col as f64 - peak) / spread;
    let raw = (-d * d).exp();
    raw / n as f64 * 3.0
}

fn age_weight(profile: usize, band: usize) -> f64 {
    // younger skew for profile 2, older for profile 1
    let peak = match profile {
        0 => 4.0,
        1 => 6.0,
        _ => 3.0,
    };
    let d: f64 = (band as f64 - peak) / 3.0;
    let raw = (-d * d).exp();
    raw / 6.0
}

/// income x mode fractions implied by the planted split and the income
/// distributions: the mode mix of a quintile is the income-weighted blend
/// of its municipalities' planted shares, row-normalized.
fn income_mode_fractions(income: &Array2<f64>, planted: &ModeSplit) -> Array2<f64> {
    let n_income = income.ncols();
    let mut out = Array2::zeros((n_income, MODES.len()));
    for q in 0..n_income {
        for m in 0..planted.municipalities().len() {
            let weight = income[[m, q]];
            let row_total: f64 = planted.counts().row(m).sum();
            if row_total <= 0.0 {
                continue;
            }
            for mode in 0..MODES.len() {
                out[[q, mode]] += weight * planted.counts()[[m, mode]] / row_total;
            }
        }
        let total: f64 = out.row(q).sum();
        if total > 0.0 {
            for mode in 0..MODES.len() {
                out[[q, mode]] /= total;
            }
        }
    }
    out
}

/// speed x mode fractions from the generated ledger, row-normalized over
/// modes per speed bin.
fn speed_mode_fractions(ledger: &[LedgerTrip], scheme: &SpeedRangeScheme) -> Result<Array2<f64>> {
    let mut counts = Array2::zeros((SPEED_BIN_COUNT, MODES.len()));
    for t in ledger {
        let bin = scheme.bin_of(t.speed_kmh)?;
        counts[[bin, t.mode]] += 1.0;
    }
    for bin in 0..SPEED_BIN_COUNT {
        let total: f64 = counts.row(bin).sum();
        if total > 0.0 {
            for mode in 0..MODES.len() {
                counts[[bin, mode]] /= total;
            }
        }
    }
    Ok(counts)
}

/// waypoint x infrastructure boolean flags from each tower's designation.
fn infrastructure_flags(g: &mut Generator<'_>) -> Array2<f64> {
    let n_towers = g.towers.len();
    let mut out = Array2::zeros((n_towers, N_INFRA));
    let rail: Vec<bool> = {
        let mut v = vec![false; n_towers];
        for list in &g.rail_towers {
            for &t in list {
                v[t] = true;
            }
        }
        v
    };
    let highway: Vec<bool> = {
        let mut v = vec![false; n_towers];
        for list in &g.highway_towers {
            for &t in list {
                v[t] = true;
            }
        }
        v
    };
    for t in 0..n_towers {
        let muni: usize = t % g.spec.n_municipalities;
        let profile = profile_of(muni);
        if rail[t] {
            out[[t, 4]] = 1.0; // rail_metro
            out[[t, 1]] = 1.0; // primary
            out[[t, 6]] = 1.0; // pedestrian
        } else if highway[t] {
            out[[t, 0]] = 1.0; // highway
            out[[t, 2]] = 1.0; // secondary
        } else {
            out[[t, 3]] = 1.0; // tertiary
            let active_prob = if profile == 2 { 0.7 } else { 0.35 };
            if g.rng.random_range(0.0..1.0) < active_prob {
                out[[t, 5]] = 1.0; // cycleway
            }
            if g.rng.random_range(0.0..1.0) < active_prob {
                out[[t, 6]] = 1.0; // pedestrian
            }
        }
    }
    out
}

/// infrastructure x mode boolean flags: which infrastructure each mode
/// plausibly uses.
fn infrastructure_mode_flags() -> Array2<f64> {
    let mut out = Array2::zeros((N_INFRA, MODES.len()));
    let set = |out: &mut Array2<f64>, infra: usize, mode: usize| {
        out[[infra, mode]] = 1.0;
    };
    // mass-transit: primary, rail_metro
    set(&mut out, 1, 0);
    set(&mut out, 4, 0);
    // motorised: highway, primary, secondary, tertiary
    for infra in 0..4 {
        set(&mut out, infra, 1);
    }
    // active: cycleway, pedestrian
    set(&mut out, 5, 2);
    set(&mut out, 6, 2);
    // taxi: highway, primary, secondary
    set(&mut out, 0, 3);
    set(&mut out, 1, 3);
    set(&mut out, 2, 3);
    out
}
