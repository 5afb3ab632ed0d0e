//! CSV reading and writing for samples and boundary sets.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::local::{BoundarySource, LimitSetEstimate};
use crate::margins::RawSample;
use crate::Scalar;

fn parse_row<T: Scalar>(record: &csv::StringRecord, line: usize, width: usize) -> std::result::Result<Vec<T>, Error> {
    if record.len() < width {
        return Err(Error::Parse { line: line as u64, message: format!("expected {width} columns, found {}", record.len()) });
    }
    record
        .iter()
        .take(width)
        .map(|field| {
            let field = field.trim();
            field
                .parse::<f64>()
                .ok()
                .and_then(T::from_f64)
                .ok_or_else(|| Error::Parse { line: line as u64, message: format!("`{field}` is not a number") })
        })
        .collect()
}

/// Reads numeric rows of `width` columns. A first line that does not parse
/// is taken as a header; any later unparsable line is an error.
fn read_numeric<T: Scalar, R: Read>(reader: R, width: usize) -> Result<Vec<Vec<T>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        match parse_row(&record, line, width) {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// Two-column sample, optionally with a header line.
pub fn read_sample<T: Scalar, R: Read>(reader: R) -> Result<RawSample<T>> {
    let rows = read_numeric::<T, R>(reader, 2)?;
    RawSample::new(rows.into_iter().map(|v| [v[0], v[1]]).collect())
}

pub fn read_sample_file<T: Scalar>(path: &Path) -> Result<RawSample<T>> {
    read_sample(std::fs::File::open(path)?)
}

pub fn write_sample<T: Scalar, W: Write>(writer: W, rows: &[[T; 2]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x1", "x2"])?;
    for r in rows {
        w.write_record([r[0].to_string(), r[1].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Boundary CSV with columns `w, x1, x2`.
pub fn write_boundary<T: Scalar, W: Write>(writer: W, boundary: &LimitSetEstimate<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["w", "x1", "x2"])?;
    for j in 0..boundary.len() {
        w.write_record([boundary.w[j].to_string(), boundary.x1[j].to_string(), boundary.x2[j].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `w, x1, x2` boundary and checks its invariants.
pub fn read_boundary<T: Scalar, R: Read>(reader: R) -> Result<LimitSetEstimate<T>> {
    let rows = read_numeric::<T, R>(reader, 3)?;
    if rows.is_empty() {
        return Err(Error::InvalidInput("boundary file has no points".into()));
    }
    let (mut w, mut x1, mut x2) = (Vec::new(), Vec::new(), Vec::new());
    for r in rows {
        w.push(r[0]);
        x1.push(r[1]);
        x2.push(r[2]);
    }
    LimitSetEstimate::from_points(w, x1, x2, BoundarySource::Local)
}
