//! ALXM binary matrices and CSV datasets.
//!
//! ALXM layout (all integers little-endian):
//!
//! ```text
//! "ALXM" | rows: u32 | cols: u32 | dtype: u8 (0 = f32, 1 = f64) | rows*cols values, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Dataset, LabelTriple, Labels, Matrix};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"ALXM";
const DTYPE_F32: u8 = 0;
const DTYPE_F64: u8 = 1;
const HEADER_LEN: usize = 13;

fn write_header(out: &mut impl Write, m: &Matrix, dtype: u8) -> Result<()> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::format("too many rows for ALXM"))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::format("too many columns for ALXM"))?;
    out.write_all(MAGIC)?;
    out.write_all(&rows.to_le_bytes())?;
    out.write_all(&cols.to_le_bytes())?;
    out.write_all(&[dtype])?;
    Ok(())
}

/// Writes `m` as f64 ALXM.
pub fn write_matrix(out: &mut impl Write, m: &Matrix) -> Result<()> {
    write_header(out, m, DTYPE_F64)?;
    for v in m.as_slice() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn store_matrix(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_matrix(&mut out, m)?;
    out.flush()?;
    Ok(())
}

/// Writes `m` narrowed to f32. Lossy; loading widens back to f64.
pub fn store_matrix_f32(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_header(&mut out, m, DTYPE_F32)?;
    for &v in m.as_slice() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(Error::format(format!("{v} overflows f32")));
        }
        out.write_all(&narrow.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix(input: &mut impl Read) -> Result<Matrix> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    parse_matrix(&bytes)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let mut input = BufReader::new(File::open(path)?);
    read_matrix(&mut input)
}

fn parse_matrix(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(format!(
            "ALXM header needs {HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format("bad magic, expected \"ALXM\""));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let width = match bytes[12] {
        DTYPE_F32 => 4,
        DTYPE_F64 => 8,
        other => return Err(Error::format(format!("unknown dtype tag {other}"))),
    };
    let payload = &bytes[HEADER_LEN..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(width))
        .ok_or_else(|| Error::format("ALXM shape overflows"))?;
    if payload.len() != expected {
        return Err(Error::format(format!(
            "{rows}x{cols} matrix needs {expected} payload bytes, found {}",
            payload.len()
        )));
    }
    let values: Vec<f64> = if width == 8 {
        payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    } else {
        payload
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect()
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::format("non-finite value in ALXM payload"));
    }
    Matrix::new(rows, cols, values)
}

/// Loads a CSV dataset.
///
/// Without `triples`, the file must have a header and a final `label` column
/// holding class indices. With `triples`, every column of `features` is a
/// feature and annotations come from a second CSV with header
/// `instance,class,value` (`value` is `0`/`1` or `true`/`false`).
pub fn load_csv_dataset(features: impl AsRef<Path>, triples: Option<&Path>) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(features)?;
    let headers = reader.headers()?.clone();
    let label_col = match triples {
        None => {
            let last = headers.len().checked_sub(1);
            match last {
                Some(i) if headers.get(i).map(str::trim) == Some("label") => Some(i),
                _ => return Err(Error::format("multiclass CSV must end with a `label` column")),
            }
        }
        Some(_) => None,
    };
    let width = headers.len() - usize::from(label_col.is_some());
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::format(format!(
                "row {} has {} fields, header has {}",
                line + 1,
                record.len(),
                headers.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            if Some(j) == label_col {
                let y: usize = field.trim().parse().map_err(|_| {
                    Error::format(format!("row {}: bad label {field:?}", line + 1))
                })?;
                labels.push(y);
            } else {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::format(format!("row {}: bad feature {field:?}", line + 1))
                })?;
                values.push(v);
            }
        }
    }
    let rows = values.len().checked_div(width).unwrap_or(0);
    let features = Matrix::new(rows, width, values).map_err(|e| Error::format(e.to_string()))?;

    match triples {
        None => {
            let num_classes = labels.iter().max().map_or(1, |m| m + 1);
            Dataset::new(features, Labels::Multiclass(labels), num_classes)
        }
        Some(path) => {
            let mut reader = csv::Reader::from_path(path)?;
            let mut out = Vec::new();
            for (line, record) in reader.records().enumerate() {
                let record = record?;
                let field = |j: usize| record.get(j).map(str::trim).unwrap_or("");
                let bad = || Error::format(format!("triples row {}: malformed", line + 1));
                let instance: usize = field(0).parse().map_err(|_| bad())?;
                let class: usize = field(1).parse().map_err(|_| bad())?;
                let positive = match field(2) {
                    "1" | "true" => true,
                    "0" | "false" => false,
                    _ => return Err(bad()),
                };
                out.push(LabelTriple {
                    instance,
                    class,
                    positive,
                });
            }
            let num_classes = out.iter().map(|t| t.class + 1).max().unwrap_or(1);
            Dataset::new(features, Labels::Multilabel(out), num_classes)
        }
    }
}
