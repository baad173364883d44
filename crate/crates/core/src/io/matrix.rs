//! Labeled matrix CSV, the single matrix interchange format: one header
//! row of target labels, one leading column of source labels, values as
//! decimal floats. Values are written with Rust's shortest round-trip
//! float formatting, so write -> read is bit-exact.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

/// A matrix with its row and column labels, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Array2<f64>,
}

pub fn write_matrix(
    path: &Path,
    row_labels: &[String],
    col_labels: &[String],
    values: &Array2<f64>,
) -> Result<()> {
    if values.dim() != (row_labels.len(), col_labels.len()) {
        return Err(Error::DegenerateInput(format!(
            "write_matrix: {:?} does not match {} x {} labels",
            values.dim(),
            row_labels.len(),
            col_labels.len()
        )));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = Vec::with_capacity(col_labels.len() + 1);
    header.push(String::new());
    header.extend(col_labels.iter().cloned());
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (i, label) in row_labels.iter().enumerate() {
        let mut record = Vec::with_capacity(col_labels.len() + 1);
        record.push(label.clone());
        record.extend(values.row(i).iter().map(|v| format!("{v}")));
        w.write_record(&record).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<LabeledMatrix> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows = r.records();
    let header = rows
        .next()
        .ok_or_else(|| Error::parse(path, "empty matrix file"))?
        .map_err(|e| csv_error(path, e))?;
    let col_labels: Vec<String> = header.iter().skip(1).map(|s| s.to_string()).collect();

    let mut row_labels = Vec::new();
    let mut data = Vec::new();
    for (line, record) in rows.enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        if record.len() != col_labels.len() + 1 {
            return Err(Error::parse(
                path,
                format!(
                    "row {}: expected {} fields, found {}",
                    line + 2,
                    col_labels.len() + 1,
                    record.len()
                ),
            ));
        }
        row_labels.push(record[0].to_string());
        for field in record.iter().skip(1) {
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(path, format!("row {}: bad float '{}'", line + 2, field))
            })?;
            data.push(v);
        }
    }
    let values = Array2::from_shape_vec((row_labels.len(), col_labels.len()), data)
        .expect("dimensions counted above");
    Ok(LabeledMatrix {
        row_labels,
        col_labels,
        values,
    })
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::parse(path, format!("{other:?}")),
    }
}
