//! CSV ingestion and emission for curve samples.
//!
//! Format: one row per curve, `G` numeric columns, optional header row
//! `t0,...,t{G-1}`. The grid is assumed equidistant on `[0, 1]` unless a
//! companion single-row grid file supplies the abscissae.

use std::path::Path;

use crate::error::{Error, Result};
use crate::funspace::{FunctionSeries, Grid};

fn parse_field(field: &str, line: usize, column: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Input {
        line,
        column,
        message: format!("cannot parse '{}' as a number", field.trim()),
    })
}

/// Parse curve rows from CSV text. Returns the rows and the detected grid
/// size; the header row is recognized by a non-numeric first field.
pub fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut expected: Option<usize> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if rows.is_empty() && expected.is_none() && fields[0].trim().parse::<f64>().is_err() {
            // header row
            expected = Some(fields.len());
            continue;
        }
        if let Some(g) = expected {
            if fields.len() != g {
                return Err(Error::Input {
                    line: line_no,
                    column: fields.len().min(g) + 1,
                    message: format!("expected {g} values, found {}", fields.len()),
                });
            }
        } else {
            expected = Some(fields.len());
        }
        let mut row = Vec::with_capacity(fields.len());
        for (j, field) in fields.iter().enumerate() {
            row.push(parse_field(field, line_no, j + 1)?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Input {
            line: 1,
            column: 1,
            message: "no curves found".into(),
        });
    }
    Ok(rows)
}

/// Read a curve file with an equidistant grid.
pub fn read_series(path: &Path) -> Result<FunctionSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = parse_rows(&text)?;
    let grid = Grid::equidistant(rows[0].len())?;
    FunctionSeries::from_rows(grid, &rows)
}

/// Read a curve file whose abscissae come from a companion single-row file.
pub fn read_series_with_grid(path: &Path, grid_path: &Path) -> Result<FunctionSeries> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = parse_rows(&text)?;
    let grid_text = std::fs::read_to_string(grid_path).map_err(|e| Error::io(grid_path, e))?;
    let grid_rows = parse_rows(&grid_text)?;
    if grid_rows.len() != 1 {
        return Err(Error::Input {
            line: 2,
            column: 1,
            message: "grid file must contain exactly one row".into(),
        });
    }
    let grid = Grid::from_points(grid_rows.into_iter().next().unwrap())?;
    FunctionSeries::from_rows(grid, &rows)
}

/// Write a series in the curve CSV format (with the `t0..t{G-1}` header).
pub fn write_series(series: &FunctionSeries, path: &Path) -> Result<()> {
    let mut out = String::new();
    let g = series.grid_len();
    for i in 0..g {
        if i > 0 {
            out.push(',');
        }
        out.push('t');
        out.push_str(&i.to_string());
    }
    out.push('\n');
    for row in series.rows() {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_float(*v));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Shortest-roundtrip decimal form of a float (what `Display` gives).
pub fn format_float(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}
