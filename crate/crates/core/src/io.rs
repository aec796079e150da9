//! CSV input and output.
//!
//! Numeric tables use comma delimiters, `.` decimals and accept scientific
//! notation. A single header row is recognised when none of its value
//! fields parse as numbers. Line numbers in errors are 1-based and count
//! the header.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::analysis::{DistanceMatrix, MdsEmbedding};
use crate::error::{Error, Result};
use crate::experiments::ErrorRow;
use crate::linalg::Matrix;
use crate::measures::{EmpiricalMeasure, UnivariateSample};
use crate::slicing::DirectionSet;
use crate::stiefel::IterationRecord;

/// A rectangular numeric table, with the optional label column split off.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub values: Matrix,
    pub labels: Option<Vec<String>>,
}

fn reader(data: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(data)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        _ => Error::Parse {
            line,
            column: 0,
            message: e.to_string(),
        },
    }
}

fn parse_number(field: &str, line: u64, column: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        column,
        message: format!("not a number: {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            column,
            message: format!("non-finite value: {field:?}"),
        });
    }
    Ok(v)
}

/// Parses a numeric table. `label_column` (0-based) names a column kept as
/// text instead of parsed.
pub fn parse_table(data: &[u8], label_column: Option<usize>) -> Result<Table> {
    let mut rdr = reader(data);
    let mut header = None;
    let mut values = Vec::new();
    let mut labels = label_column.map(|_| Vec::new());
    let mut width: Option<usize> = None;
    let mut rows = 0usize;
    for (index, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(index as u64 + 1);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            Some(w) if w != record.len() => {
                return Err(Error::RaggedRows {
                    line,
                    expected: w,
                    found: record.len(),
                })
            }
            _ => width = Some(record.len()),
        }
        if let Some(lc) = label_column {
            if lc >= record.len() {
                return Err(Error::Parse {
                    line,
                    column: lc + 1,
                    message: format!("label column {} missing from a row of {} fields", lc + 1, record.len()),
                });
            }
        }
        let is_value = |c: usize| Some(c) != label_column;
        if index == 0 && header.is_none() && values.is_empty() {
            let numeric = record
                .iter()
                .enumerate()
                .filter(|(c, _)| is_value(*c))
                .any(|(_, f)| f.parse::<f64>().is_ok());
            if !numeric {
                header = Some(record.iter().map(str::to_string).collect());
                continue;
            }
        }
        for (c, field) in record.iter().enumerate() {
            if is_value(c) {
                values.push(parse_number(field, line, c + 1)?);
            } else if let Some(l) = labels.as_mut() {
                l.push(field.to_string());
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyFile);
    }
    let cols = width.unwrap_or(0) - usize::from(label_column.is_some());
    if cols == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok(Table {
        header,
        values: Matrix::new(rows, cols, values)?,
        labels,
    })
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    File::open(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?
        .read_to_end(&mut buf)?;
    Ok(buf)
}

pub fn read_table(path: &Path, label_column: Option<usize>) -> Result<Table> {
    parse_table(&read_all(path)?, label_column)
}

/// Rows of the file as uniformly weighted support points.
pub fn ingest_csv(path: &Path) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::uniform(read_table(path, None)?.values)
}

/// A single numeric column as a uniformly weighted univariate sample.
pub fn parse_values(data: &[u8]) -> Result<UnivariateSample> {
    let table = parse_table(data, None)?;
    if table.values.cols() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected one column of values, found {}",
            table.values.cols()
        )));
    }
    UnivariateSample::uniform(table.values.into_vec())
}

pub fn read_values(path: &Path) -> Result<UnivariateSample> {
    parse_values(&read_all(path)?)
}

/// Distance matrix with the item labels as header row.
pub fn parse_distance_matrix(data: &[u8]) -> Result<DistanceMatrix> {
    let mut rdr = reader(data);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(csv_error)?,
        None => return Err(Error::EmptyFile),
    };
    let labels: Vec<String> = header.iter().map(str::to_string).collect();
    let n = labels.len();
    let mut values = Vec::with_capacity(n * n);
    let mut rows = 0;
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != n {
            return Err(Error::RaggedRows {
                line,
                expected: n,
                found: record.len(),
            });
        }
        for (c, field) in record.iter().enumerate() {
            values.push(parse_number(field, line, c + 1)?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyFile);
    }
    if rows != n {
        return Err(Error::DimensionMismatch(format!("{n} labels but {rows} rows")));
    }
    DistanceMatrix::new(labels, Matrix::new(n, n, values)?, "csv")
}

pub fn read_distance_matrix(path: &Path) -> Result<DistanceMatrix> {
    parse_distance_matrix(&read_all(path)?)
}

pub fn write_distance_matrix<W: Write>(out: W, d: &DistanceMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(d.labels()).map_err(csv_error)?;
    for row in d.values().row_iter() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Ground-truth classes. One column gives labels in item order; two columns
/// give `(item, label)` pairs matched to `items` by name. Labels are
/// numbered in order of first appearance.
pub fn parse_truth(data: &[u8], items: &[String]) -> Result<Vec<usize>> {
    let mut rdr = reader(data);
    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        rows.push(record.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }
    let width = rows[0].len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
        return Err(Error::RaggedRows {
            line: i as u64 + 1,
            expected: width,
            found: r.len(),
        });
    }
    let names: Vec<String> = match width {
        1 => {
            if rows.len() != items.len() {
                return Err(Error::LengthMismatch {
                    left: rows.len(),
                    right: items.len(),
                });
            }
            rows.into_iter().map(|mut r| r.remove(0)).collect()
        }
        2 => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                let row = rows.iter().find(|r| &r[0] == item).ok_or_else(|| {
                    Error::InvalidArgument(format!("no ground-truth label for item {item:?}"))
                })?;
                out.push(row[1].clone());
            }
            out
        }
        w => {
            return Err(Error::DimensionMismatch(format!(
                "truth file must have 1 or 2 columns, found {w}"
            )))
        }
    };
    let mut seen: Vec<&String> = Vec::new();
    Ok(names
        .iter()
        .map(|n| match seen.iter().position(|s| *s == n) {
            Some(p) => p,
            None => {
                seen.push(n);
                seen.len() - 1
            }
        })
        .collect())
}

pub fn read_truth(path: &Path, items: &[String]) -> Result<Vec<usize>> {
    parse_truth(&read_all(path)?, items)
}

pub fn write_directions<W: Write>(out: W, d: &DirectionSet) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..d.dim()).map(|j| format!("theta_{j}"))).map_err(csv_error)?;
    for row in d.directions().row_iter() {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads directions written by [`write_directions`]; `seed` is recorded on
/// the result.
pub fn parse_directions(data: &[u8], seed: u64) -> Result<DirectionSet> {
    DirectionSet::new(parse_table(data, None)?.values, seed)
}

pub fn write_trace<W: Write>(out: W, iterates: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in iterates {
        w.serialize(rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per grid size: `size,mean,median,min,max`.
pub fn write_error_rows<W: Write>(out: W, rows: &[ErrorRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mds<W: Write>(out: W, labels: &[String], mds: &MdsEmbedding) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "x", "y"]).map_err(csv_error)?;
    for (i, label) in labels.iter().enumerate() {
        let c = mds.coordinates.row(i);
        w.write_record([label.clone(), c[0].to_string(), c[1].to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
