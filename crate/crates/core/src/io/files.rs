//! Readers and writers for the raw pipeline inputs: events, towers, app
//! usage, associations, exclusions, official statistics, speed schemes,
//! macro-area mappings, and the relation manifest.
//!
//! Bulk readers (events, towers, usage) are lenient: malformed rows are
//! collected with their line numbers instead of aborting, and the caller
//! enforces an abort threshold.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::Provenance;
use crate::ingest::{NetworkEvent, SpeedRangeScheme, Tower};
use crate::priors::{ModeSplit, MunicipalityStats, OfficialStats};

use super::matrix::csv_error;

/// A row the lenient readers could not parse.
#[derive(Debug, Clone, PartialEq)]
pub struct MalformedRow {
    pub line: usize,
    pub detail: String,
}

/// Parsed rows plus whatever failed to parse.
#[derive(Debug, Clone)]
pub struct LenientRead<T> {
    pub rows: Vec<T>,
    pub malformed: Vec<MalformedRow>,
    pub total_rows: usize,
}

fn read_lenient<T>(
    path: &Path,
    expected_fields: usize,
    mut parse: impl FnMut(&csv::StringRecord) -> std::result::Result<T, String>,
) -> Result<LenientRead<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut out = LenientRead {
        rows: Vec::new(),
        malformed: Vec::new(),
        total_rows: 0,
    };
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        out.total_rows += 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                out.malformed.push(MalformedRow {
                    line,
                    detail: e.to_string(),
                });
                continue;
            }
        };
        if record.len() != expected_fields {
            out.malformed.push(MalformedRow {
                line,
                detail: format!("expected {expected_fields} fields, found {}", record.len()),
            });
            continue;
        }
        match parse(&record) {
            Ok(row) => out.rows.push(row),
            Err(detail) => out.malformed.push(MalformedRow { line, detail }),
        }
    }
    Ok(out)
}

/// Events file: `device,tower,timestamp`.
pub fn read_events(path: &Path) -> Result<LenientRead<NetworkEvent>> {
    read_lenient(path, 3, |r| {
        let timestamp: i64 = r[2]
            .parse()
            .map_err(|_| format!("bad timestamp '{}'", &r[2]))?;
        Ok(NetworkEvent {
            device: r[0].to_string(),
            tower: r[1].to_string(),
            timestamp,
        })
    })
}

pub fn write_events(path: &Path, events: &[NetworkEvent]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["device", "tower", "timestamp"])
        .map_err(|e| csv_error(path, e))?;
    for e in events {
        w.write_record([&e.device, &e.tower, &e.timestamp.to_string()])
            .map_err(|err| csv_error(path, err))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Towers file: `tower,x_m,y_m,municipality`.
pub fn read_towers(path: &Path) -> Result<LenientRead<Tower>> {
    read_lenient(path, 4, |r| {
        let x_m: f64 = r[1].parse().map_err(|_| format!("bad x '{}'", &r[1]))?;
        let y_m: f64 = r[2].parse().map_err(|_| format!("bad y '{}'", &r[2]))?;
        Ok(Tower {
            id: r[0].to_string(),
            x_m,
            y_m,
            municipality: r[3].to_string(),
        })
    })
}

pub fn write_towers(path: &Path, towers: &[Tower]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["tower", "x_m", "y_m", "municipality"])
        .map_err(|e| csv_error(path, e))?;
    for t in towers {
        w.write_record([
            t.id.as_str(),
            &format!("{}", t.x_m),
            &format!("{}", t.y_m),
            t.municipality.as_str(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// One usage observation in the long-format DPI file:
/// `tower,domain,count`.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageRow {
    pub tower: String,
    pub domain: String,
    pub count: f64,
}

pub fn read_usage(path: &Path) -> Result<LenientRead<UsageRow>> {
    read_lenient(path, 3, |r| {
        let count: f64 = r[2]
            .parse()
            .map_err(|_| format!("bad count '{}'", &r[2]))?;
        if !count.is_finite() || count < 0.0 {
            return Err(format!("negative or non-finite count '{}'", &r[2]));
        }
        Ok(UsageRow {
            tower: r[0].to_string(),
            domain: r[1].to_string(),
            count,
        })
    })
}

pub fn write_usage(path: &Path, rows: &[UsageRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["tower", "domain", "count"])
        .map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record([r.tower.as_str(), r.domain.as_str(), &format!("{}", r.count)])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Association file: one line per app, `app,mode1[,mode2,...]`.
pub fn read_associations(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let app = fields
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::parse(path, format!("line {}: missing app", i + 1)))?;
        let modes: Vec<String> = fields.map(|s| s.to_string()).collect();
        if modes.is_empty() || modes.iter().any(|m| m.is_empty()) {
            return Err(Error::parse(
                path,
                format!("line {}: app '{app}' lists no modes", i + 1),
            ));
        }
        out.push((app.to_string(), modes));
    }
    Ok(out)
}

pub fn write_associations(path: &Path, rows: &[(String, Vec<String>)]) -> Result<()> {
    let mut text = String::new();
    for (app, modes) in rows {
        text.push_str(app);
        for m in modes {
            text.push(',');
            text.push_str(m);
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Exclusion list: one domain per line, `#` comments allowed.
pub fn read_exclusions(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_string())
        .collect())
}

pub fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut text = lines.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// The citywide metro scalars ride in the stats CSV as a pseudo-row with
/// this municipality name.
pub const METRO_ROW: &str = "@metro";

/// Stats file: `municipality,pop_base,pop_new,permits_base,permits_new`
/// rows, plus one `@metro` row whose pop columns carry the citywide
/// smart-card transaction counts.
pub fn read_stats(path: &Path) -> Result<OfficialStats> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut municipalities = Vec::new();
    let mut metro: Option<(f64, f64)> = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != 5 {
            return Err(Error::parse(
                path,
                format!("line {}: expected 5 fields", i + 2),
            ));
        }
        let num = |field: usize| -> Result<f64> {
            record[field].parse().map_err(|_| {
                Error::parse(
                    path,
                    format!("line {}: bad number '{}'", i + 2, &record[field]),
                )
            })
        };
        if &record[0] == METRO_ROW {
            metro = Some((num(1)?, num(2)?));
        } else {
            municipalities.push(MunicipalityStats {
                name: record[0].to_string(),
                pop_base: num(1)?,
                pop_new: num(2)?,
                permits_base: num(3)?,
                permits_new: num(4)?,
            });
        }
    }
    let (metro_base, metro_new) =
        metro.ok_or_else(|| Error::parse(path, format!("missing '{METRO_ROW}' row")))?;
    Ok(OfficialStats::new(municipalities, metro_base, metro_new))
}

pub fn write_stats(path: &Path, stats: &OfficialStats) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record([
        "municipality",
        "pop_base",
        "pop_new",
        "permits_base",
        "permits_new",
    ])
    .map_err(|e| csv_error(path, e))?;
    for m in &stats.municipalities {
        w.write_record([
            m.name.as_str(),
            &format!("{}", m.pop_base),
            &format!("{}", m.pop_new),
            &format!("{}", m.permits_base),
            &format!("{}", m.permits_new),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.write_record([
        METRO_ROW,
        &format!("{}", stats.metro_base),
        &format!("{}", stats.metro_new),
        "0",
        "0",
    ])
    .map_err(|e| csv_error(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Speed scheme file: one bin edge per line, 9 lines from 0 to 120.
pub fn read_speed_scheme(path: &Path) -> Result<SpeedRangeScheme> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::parse(path, format!("line {}: bad edge '{line}'", i + 1)))?;
        edges.push(v);
    }
    SpeedRangeScheme::from_edges(edges)
}

pub fn write_speed_scheme(path: &Path, scheme: &SpeedRangeScheme) -> Result<()> {
    let lines: Vec<String> = scheme.edges().iter().map(|e| format!("{e}")).collect();
    write_lines(path, &lines)
}

/// Macro-area mapping: `municipality,macro_area`.
pub fn read_macro_areas(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut out = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != 2 {
            return Err(Error::parse(
                path,
                format!("line {}: expected 2 fields", i + 2),
            ));
        }
        out.insert(record[0].to_string(), record[1].to_string());
    }
    Ok(out)
}

pub fn write_macro_areas(path: &Path, mapping: &BTreeMap<String, String>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["municipality", "macro_area"])
        .map_err(|e| csv_error(path, e))?;
    for (m, a) in mapping {
        w.write_record([m.as_str(), a.as_str()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// One row of the relation manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub source_concept: String,
    pub target_concept: String,
    /// relative to the manifest's directory
    pub path: PathBuf,
    pub provenance: Provenance,
}

/// Relation manifest: `id,source,target,path,provenance`.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != 5 {
            return Err(Error::parse(
                path,
                format!("line {}: expected 5 fields", i + 2),
            ));
        }
        out.push(ManifestEntry {
            id: record[0].to_string(),
            source_concept: record[1].to_string(),
            target_concept: record[2].to_string(),
            path: PathBuf::from(&record[3]),
            provenance: record[4].parse()?,
        });
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["id", "source", "target", "path", "provenance"])
        .map_err(|e| csv_error(path, e))?;
    for e in entries {
        w.write_record([
            e.id.as_str(),
            e.source_concept.as_str(),
            e.target_concept.as_str(),
            e.path.to_str().expect("manifest paths are utf-8"),
            e.provenance.as_str(),
        ])
        .map_err(|err| csv_error(path, err))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Write a mode split in the matrix CSV format.
pub fn write_mode_split(path: &Path, split: &ModeSplit) -> Result<()> {
    super::matrix::write_matrix(
        path,
        split.municipalities(),
        &crate::appusage::mode_labels(),
        split.counts(),
    )
}

/// Read a mode split from the matrix CSV format; mode columns may appear
/// in any order.
pub fn read_mode_split(path: &Path) -> Result<ModeSplit> {
    let m = super::matrix::read_matrix(path)?;
    ModeSplit::from_labeled(m.row_labels, &m.col_labels, m.values)
}
