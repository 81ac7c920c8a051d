//! Point-set CSV: one point per line, comma separated, optional header.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::points::PointSet;

pub fn read_points<R: Read>(reader: R, has_header: bool) -> Result<PointSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut dim = None;
    let mut coords = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match dim {
            None => dim = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {d} fields, found {}", record.len()),
                })
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid number {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite value {field:?}"),
                });
            }
            coords.push(v);
        }
    }
    let dim = dim.ok_or(Error::Parse {
        line: 0,
        message: "no points in input".into(),
    })?;
    PointSet::new(dim, coords)
}

pub fn read_points_file(path: impl AsRef<Path>, has_header: bool) -> Result<PointSet> {
    let file = std::fs::File::open(path)?;
    read_points(std::io::BufReader::new(file), has_header)
}

/// Writes with 17 significant digits so values round-trip exactly.
pub fn write_points<W: Write>(writer: W, points: &PointSet) -> Result<()> {
    let mut w = std::io::BufWriter::new(writer);
    for p in points.iter() {
        let line: Vec<String> = p.iter().map(|v| format_float(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_points_file(path: impl AsRef<Path>, points: &PointSet) -> Result<()> {
    write_points(std::fs::File::create(path)?, points)
}

/// Scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}
