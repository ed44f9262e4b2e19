//! Minimal helpers shared by the CSV readers and writers.
//!
//! Every file format in the crate is a header line followed by rows of plain
//! comma-separated decimal numbers, so a full CSV dependency is not needed.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Reads a numeric CSV with the exact `header`, returning the data rows.
///
/// Row indices in errors are 1-based file line numbers (the header is line 1).
pub(crate) fn read_numeric<R: BufRead>(reader: R, header: &str) -> Result<Vec<Vec<f64>>> {
    let ncol = header.split(',').count();
    let mut lines = reader.lines();
    let first = match lines.next() {
        Some(line) => line?,
        None => {
            return Err(Error::Parse {
                row: 1,
                message: "empty input, expected a header line".into(),
            })
        }
    };
    let first = first.trim_start_matches('\u{feff}').trim();
    if first != header {
        return Err(Error::Parse {
            row: 1,
            message: format!("expected header `{header}`, found `{first}`"),
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        let row = idx + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != ncol {
            return Err(Error::Parse {
                row,
                message: format!("expected {ncol} fields, found {}", fields.len()),
            });
        }
        let mut values = Vec::with_capacity(ncol);
        for field in fields {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                row,
                message: format!("cannot parse `{field}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("non-finite value `{field}`"),
                });
            }
            values.push(v);
        }
        rows.push(values);
    }
    Ok(rows)
}

/// Writes a header and rows. Values use Rust's shortest round-trip formatting,
/// so reading the file back reproduces every number bit for bit.
pub(crate) fn write_numeric<W: Write>(mut w: W, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    writeln!(w, "{header}")?;
    let mut line = String::new();
    for row in rows {
        line.clear();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:?}"));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}
