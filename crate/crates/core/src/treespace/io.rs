//! Plain-text matrix and mark vectors, and a JSON triple for finite spaces.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::matrix::{DistanceMatrix, Tolerances};
use super::mmspace::FiniteMMSpace;
use crate::error::{Error, Result};

fn parse_row(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .enumerate()
        .map(|(k, tok)| {
            tok.parse::<f64>().map_err(|_| {
                Error::config(format!("line {lineno}, column {}", k + 1), format!("not a number: {tok:?}"))
            })
        })
        .collect()
}

/// Reads a square matrix, one whitespace-separated row per line. Blank
/// lines and lines starting with `#` are skipped.
pub fn read_matrix<R: BufRead>(reader: R) -> Result<DistanceMatrix<f64>> {
    let mut rows = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        rows.push(parse_row(t, k + 1)?);
    }
    DistanceMatrix::from_rows(rows).map_err(|e| Error::config("matrix", e.to_string()))
}

pub fn write_matrix<W: Write>(mut w: W, m: &DistanceMatrix<f64>) -> Result<()> {
    for i in 0..m.n() {
        let row: Vec<String> = m.row(i).iter().map(|x| format!("{x}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Reads a mark vector: all whitespace-separated numbers in the input.
pub fn read_marks<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.extend(parse_row(t, k + 1)?);
    }
    Ok(out)
}

pub fn write_marks<W: Write>(mut w: W, v: &[f64]) -> Result<()> {
    let row: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    writeln!(w, "{}", row.join(" "))?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    dist: Vec<Vec<f64>>,
    weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    marks: Option<Vec<f64>>,
}

pub fn write_space<W: Write>(w: W, space: &FiniteMMSpace<f64>) -> Result<()> {
    let d = space.dist();
    let file = SpaceFile {
        dist: (0..d.n()).map(|i| d.row(i).to_vec()).collect(),
        weights: space.weights().to_vec(),
        marks: space.is_marked().then(|| space.marks().to_vec()),
    };
    serde_json::to_writer_pretty(w, &file).map_err(|e| Error::config("space", e.to_string()))
}

pub fn read_space<R: BufRead>(r: R, tol: &Tolerances) -> Result<FiniteMMSpace<f64>> {
    let file: SpaceFile = serde_json::from_reader(r).map_err(|e| Error::config("space", e.to_string()))?;
    let dist = DistanceMatrix::from_rows(file.dist).map_err(|e| Error::config("dist", e.to_string()))?;
    FiniteMMSpace::new(dist, file.weights, file.marks, tol).map_err(|e| Error::config("weights/marks", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_text_roundtrip() {
        let m = DistanceMatrix::from_upper(3, |i, j| (i + 2 * j) as f64 * 0.5);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn malformed_matrix_names_the_position() {
        let err = read_matrix("0 1\n1 x\n".as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "line 2, column 2: not a number: \"x\"");
        assert!(read_matrix("0 1\n2 0\n".as_bytes()).is_err());
    }

    #[test]
    fn space_roundtrip() {
        let d = DistanceMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let s = FiniteMMSpace::new(d, vec![0.25, 0.75], Some(vec![0.0, 2.0]), &Tolerances::default()).unwrap();
        let mut buf = Vec::new();
        write_space(&mut buf, &s).unwrap();
        let back = read_space(buf.as_slice(), &Tolerances::default()).unwrap();
        assert_eq!(back, s);
        assert_eq!(read_marks("1 2\n3\n".as_bytes()).unwrap(), vec![1.0, 2.0, 3.0]);
    }
}
