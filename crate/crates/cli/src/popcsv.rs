//! CSV readers for per-face data and the density dump writer.
//!
//! All files share one shape: comma-separated records, one per line, with an
//! optional header (any first line whose first field is not a number), `#`
//! comments, and blank lines. Errors carry the file path and 1-based line
//! number of the offending record.

use std::fmt::Write as _;
use std::path::Path;

use deq_core::{Error, Result};

/// Parsed `key,value` record stream shared by all three readers.
fn records(path: &Path, text: &str) -> Result<Vec<(usize, u64, f64)>> {
    let mut out = Vec::new();
    let mut first_data_line = true;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (key, value) = match (fields.next(), fields.next(), fields.next()) {
            (Some(k), Some(v), None) => (k, v),
            _ => {
                return Err(Error::parse(
                    path,
                    line_no,
                    "expected exactly two comma-separated fields",
                ))
            }
        };
        match key.parse::<u64>() {
            Ok(k) => {
                let v: f64 = value.parse().map_err(|_| {
                    Error::parse(path, line_no, format!("bad numeric value {value:?}"))
                })?;
                out.push((line_no, k, v));
            }
            Err(_) if first_data_line => {
                // Tolerate a single header line such as `face_index,population`.
            }
            Err(_) => {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("bad face index {key:?}"),
                ))
            }
        }
        first_data_line = false;
    }
    Ok(out)
}

/// Reads a population CSV (`face_index,population`, 0-based indices) into a
/// dense per-face vector. Every face must appear exactly once and every value
/// must be strictly positive.
pub fn read_population_csv(path: &Path, face_count: usize) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = vec![None; face_count];
    for (line_no, face, value) in records(path, &text)? {
        let face = face as usize;
        if face >= face_count {
            return Err(Error::parse(
                path,
                line_no,
                format!("face index {face} out of range (mesh has {face_count} faces)"),
            ));
        }
        if !(value > 0.0) {
            return Err(Error::parse(
                path,
                line_no,
                format!("population for face {face} is not strictly positive ({value})"),
            ));
        }
        if values[face].replace(value).is_some() {
            return Err(Error::parse(
                path,
                line_no,
                format!("face {face} appears more than once"),
            ));
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(face, v)| {
            v.ok_or_else(|| Error::parse(path, 0, format!("no population given for face {face}")))
        })
        .collect()
}

/// Reads a region label CSV (`face_index,region_id`) into a dense per-face
/// label vector. Same coverage rules as the population reader.
pub fn read_region_labels(path: &Path, face_count: usize) -> Result<Vec<u64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = vec![None; face_count];
    for (line_no, face, value) in records(path, &text)? {
        let face = face as usize;
        if face >= face_count {
            return Err(Error::parse(
                path,
                line_no,
                format!("face index {face} out of range (mesh has {face_count} faces)"),
            ));
        }
        if value < 0.0 || value.fract() != 0.0 {
            return Err(Error::parse(
                path,
                line_no,
                format!("region id for face {face} must be a nonnegative integer, got {value}"),
            ));
        }
        if labels[face].replace(value as u64).is_some() {
            return Err(Error::parse(
                path,
                line_no,
                format!("face {face} appears more than once"),
            ));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(face, v)| {
            v.ok_or_else(|| Error::parse(path, 0, format!("no region label for face {face}")))
        })
        .collect()
}

/// Reads region scale rules (`region_id,multiplier`). Order is preserved;
/// repeated region ids compose multiplicatively downstream.
pub fn read_region_rules(path: &Path) -> Result<Vec<(u64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rules: Vec<(u64, f64)> = records(path, &text)?
        .into_iter()
        .map(|(_, region, multiplier)| (region, multiplier))
        .collect();
    if rules.is_empty() {
        return Err(Error::parse(path, 0, "rules file contains no rules"));
    }
    Ok(rules)
}

/// Writes per-face values as `face_index,density` lines under a header.
pub fn write_density_csv(path: &Path, values: &[f64]) -> Result<()> {
    let mut out = String::from("face_index,density\n");
    for (face, v) in values.iter().enumerate() {
        writeln!(out, "{face},{v}").unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
