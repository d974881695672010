//! Plain-text serialisation: numeric CSV and PGM (P2) heatmaps.
//!
//! The CSV dialect is deliberately primitive — comma-separated decimal
//! numbers, one vector per line, no quoting, no headers — so files diff
//! cleanly and any tool can read them. Heatmaps are ASCII PGM with
//! min-max scaling to the 8-bit grey range: language-neutral, viewable
//! almost anywhere, and trivially comparable in tests.
//!
//! String-level codecs are separated from the path-level wrappers so
//! no-filesystem callers (the browser demo) can reuse them.

use crate::{Error, Result};
use std::path::Path;

/// Formats a vector as one CSV line (trailing newline included).
pub fn vector_to_csv(v: &[f64]) -> String {
    let cells: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("{}\n", cells.join(","))
}

/// Formats a matrix as one CSV line per row (trailing newline included).
pub fn matrix_to_csv(rows: &[Vec<f64>]) -> String {
    let mut text = String::new();
    for row in rows {
        text.push_str(&vector_to_csv(row));
    }
    text
}

/// Parses one line of comma-separated numbers.
fn parse_line(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|cell| {
            let cell = cell.trim();
            cell.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {lineno}: bad number {cell:?}")))
        })
        .collect()
}

/// Parses a single-line CSV vector; extra blank lines are rejected.
pub fn vector_from_csv(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let first = lines.next().ok_or(Error::EmptyInput("csv vector"))?;
    if lines.next().is_some() {
        return Err(Error::Parse(
            "expected a single-line vector, found multiple rows".into(),
        ));
    }
    parse_line(first, 1)
}

/// Parses a CSV matrix, one row per line; rows must be equally long.
pub fn matrix_from_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_line(line, i + 1)?);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("csv matrix"));
    }
    let width = rows[0].len();
    if let Some(bad) = rows.iter().position(|r| r.len() != width) {
        return Err(Error::Parse(format!(
            "row {} has {} cells, expected {width}",
            bad + 1,
            rows[bad].len()
        )));
    }
    Ok(rows)
}

/// Reads a single-line CSV vector from `path`.
pub fn read_vector_csv(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    vector_from_csv(&std::fs::read_to_string(path)?)
}

/// Reads a CSV matrix from `path`.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    matrix_from_csv(&std::fs::read_to_string(path)?)
}

/// Writes a vector as a single CSV line to `path`.
pub fn write_vector_csv(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    Ok(std::fs::write(path, vector_to_csv(v))?)
}

/// Writes a matrix as CSV rows to `path`.
pub fn write_matrix_csv(path: impl AsRef<Path>, rows: &[Vec<f64>]) -> Result<()> {
    Ok(std::fs::write(path, matrix_to_csv(rows))?)
}

/// Renders a rectangular map as an ASCII PGM (P2) image, min-max scaled
/// to `0..=255`. A constant map renders as all-black; non-finite cells
/// are rejected.
pub fn matrix_to_pgm(rows: &[Vec<f64>]) -> Result<String> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::EmptyInput("heatmap"));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::ShapeMismatch(
            "heatmap rows have unequal lengths".into(),
        ));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in rows {
        for &v in row {
            if !v.is_finite() {
                return Err(Error::NonFinite("heatmap cell"));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let span = hi - lo;
    let mut out = format!("P2\n{width} {}\n255\n", rows.len());
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|&v| {
                let grey = if span == 0.0 {
                    0
                } else {
                    ((v - lo) / span * 255.0).round() as u32
                };
                grey.to_string()
            })
            .collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// Writes a min-max scaled PGM heatmap to `path`.
pub fn write_pgm(path: impl AsRef<Path>, rows: &[Vec<f64>]) -> Result<()> {
    Ok(std::fs::write(path, matrix_to_pgm(rows)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_round_trip_through_csv() {
        let v = vec![0.359375, -0.90625, 1.5e-9, 3.0];
        let text = vector_to_csv(&v);
        assert_eq!(text, "0.359375,-0.90625,0.0000000015,3\n");
        assert_eq!(vector_from_csv(&text).unwrap(), v);
    }

    #[test]
    fn matrices_round_trip_through_csv() {
        let m = vec![vec![1.0, 2.5], vec![-3.0, 0.0625]];
        let text = matrix_to_csv(&m);
        assert_eq!(text, "1,2.5\n-3,0.0625\n");
        assert_eq!(matrix_from_csv(&text).unwrap(), m);
    }

    #[test]
    fn committed_fixture_files_parse() {
        let root = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
        let v = read_vector_csv(root.join("input_4.csv")).unwrap();
        assert_eq!(v.len(), 4);
        let m = read_matrix_csv(root.join("input_4x4.csv")).unwrap();
        assert_eq!((m.len(), m[0].len()), (4, 4));
    }

    #[test]
    fn malformed_csv_is_reported_with_position() {
        match vector_from_csv("1.0,abc,3\n") {
            Err(Error::Parse(msg)) => assert!(msg.contains("abc"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(vector_from_csv("1\n2\n"), Err(Error::Parse(_))));
        assert!(matches!(vector_from_csv(""), Err(Error::EmptyInput(_))));
        assert!(matches!(matrix_from_csv("1,2\n3\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn pgm_scales_to_the_full_grey_range() {
        let rows = vec![vec![0.0, 0.5], vec![1.0, 0.25]];
        let pgm = matrix_to_pgm(&rows).unwrap();
        assert_eq!(pgm, "P2\n2 2\n255\n0 128\n255 64\n");
    }

    #[test]
    fn pgm_handles_constant_and_rejects_bad_maps() {
        assert_eq!(
            matrix_to_pgm([vec![3.5, 3.5]].as_ref()).unwrap(),
            "P2\n2 1\n255\n0 0\n"
        );
        assert!(matches!(matrix_to_pgm(&[][..]), Err(Error::EmptyInput(_))));
        assert!(matches!(
            matrix_to_pgm(&[vec![1.0], vec![1.0, 2.0]]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            matrix_to_pgm(&[vec![f64::NAN]]),
            Err(Error::NonFinite(_))
        ));
    }
}
