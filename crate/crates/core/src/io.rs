//! Plain-text file formats: basis and activation CSVs, ensemble CSV and the
//! JSON run summary.
//!
//! Floats are written with Rust's shortest round-trip formatting, so files
//! are byte-for-byte reproducible and re-read to the identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::basis::{BasisKind, BasisSet};
use crate::error::{Result, SrmError};
use crate::srm::{EnsembleSummary, SrmEnsemble};

/// Norm deviation that is silently renormalised when reading a basis.
pub const RENORMALIZE_TOL: f64 = 1e-6;

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.nrows() * m.ncols() * 20);
    for row in m.row_iter() {
        for (k, x) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{x}").expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

/// Canonical CSV encoding of a basis: one vector per row, no header.
pub fn basis_csv_bytes(basis: &BasisSet) -> Vec<u8> {
    matrix_csv(basis.matrix()).into_bytes()
}

/// SHA-256 of [`basis_csv_bytes`], lowercase hex.
pub fn basis_fingerprint(basis: &BasisSet) -> String {
    hex::encode(Sha256::digest(basis_csv_bytes(basis)))
}

pub fn write_basis_csv(basis: &BasisSet, path: &Path) -> Result<()> {
    fs::write(path, basis_csv_bytes(basis))?;
    Ok(())
}

fn parse_rows(text: &str, allow_header: bool) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let parsed = match parsed {
            Ok(p) => p,
            Err(_) if line == 0 && allow_header => continue,
            Err(e) => {
                return Err(SrmError::InvalidInput(format!(
                    "line {}: not a number ({e})",
                    line + 1
                )))
            }
        };
        match width {
            None => width = Some(parsed.len()),
            Some(w) if w != parsed.len() => {
                return Err(SrmError::DimensionMismatch {
                    expected: w,
                    got: parsed.len(),
                })
            }
            Some(_) => {}
        }
        if parsed.iter().any(|x| !x.is_finite()) {
            return Err(SrmError::InvalidInput(format!("line {}: non-finite value", line + 1)));
        }
        values.extend(parsed);
        rows += 1;
    }
    let width = width.ok_or(SrmError::EmptyDataset)?;
    Ok(DMatrix::from_row_slice(rows, width, &values))
}

/// Reads a basis CSV. Rows within [`RENORMALIZE_TOL`] of unit norm are
/// rescaled; anything further off is an error.
pub fn read_basis_csv(path: &Path, kind: BasisKind) -> Result<BasisSet> {
    parse_basis_csv(&fs::read_to_string(path)?, kind)
}

pub fn parse_basis_csv(text: &str, kind: BasisKind) -> Result<BasisSet> {
    let mut m = parse_rows(text, false)?;
    for (i, mut row) in m.row_iter_mut().enumerate() {
        let norm = row.norm();
        if (norm - 1.0).abs() > RENORMALIZE_TOL {
            return Err(SrmError::InvalidInput(format!(
                "basis row {} has norm {norm}",
                i + 1
            )));
        }
        // Rows already unit to working precision are kept bit-for-bit.
        if (norm - 1.0).abs() > 1e-12 {
            row /= norm;
        }
    }
    BasisSet::from_rows(m, kind, None)
}

/// Reads raw activations, one sample per row. A single non-numeric first
/// line is taken as a header and skipped.
pub fn read_activations_csv(path: &Path) -> Result<DMatrix<f64>> {
    parse_rows(&fs::read_to_string(path)?, true)
}

pub fn parse_activations_csv(text: &str) -> Result<DMatrix<f64>> {
    parse_rows(text, true)
}

pub fn write_activations_csv(data: &DMatrix<f64>, path: &Path) -> Result<()> {
    fs::write(path, matrix_csv(data))?;
    Ok(())
}

/// Long-format ensemble table: `theta,alpha,beta,value`.
pub fn ensemble_csv(ens: &SrmEnsemble) -> String {
    let mut out = String::from("theta,alpha,beta,value\n");
    for curve in &ens.curves {
        let (a, b) = curve.plane;
        for (theta, value) in ens.thetas.iter().zip(&curve.values) {
            writeln!(out, "{theta},{a},{b},{value}").expect("writing to a String cannot fail");
        }
    }
    out
}

pub fn write_ensemble_csv(ens: &SrmEnsemble, path: &Path) -> Result<()> {
    fs::write(path, ensemble_csv(ens))?;
    Ok(())
}

pub fn write_summary_json(summary: &EnsembleSummary, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// One value per line with a header, e.g. a loss trace.
pub fn write_series_csv(header: &str, values: &[(usize, f64)], path: &Path) -> Result<()> {
    let mut out = format!("{header}\n");
    for (k, v) in values {
        writeln!(out, "{k},{v}").expect("writing to a String cannot fail");
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{gen_random, gen_simplex};

    #[test]
    fn basis_round_trip_is_exact() {
        let b = gen_random(5, 9, 3).unwrap();
        let back = parse_basis_csv(std::str::from_utf8(&basis_csv_bytes(&b)).unwrap(), BasisKind::Random)
            .unwrap();
        assert_eq!(back.matrix(), b.matrix());
        assert_eq!(basis_fingerprint(&back), basis_fingerprint(&b));
    }

    #[test]
    fn fingerprint_is_hex_sha256() {
        let f = basis_fingerprint(&gen_simplex(3, None).unwrap());
        assert_eq!(f.len(), 64);
        assert!(f.chars().all(|c| c.is_ascii_hexdigit()));
        assert_ne!(f, basis_fingerprint(&gen_simplex(4, None).unwrap()));
    }

    #[test]
    fn basis_reader_renormalizes_small_drift_only() {
        let b = parse_basis_csv("1.0000005,0\n0,1\n", BasisKind::Custom).unwrap();
        assert_eq!(b.matrix()[(0, 0)], 1.0);
        assert!(parse_basis_csv("1.01,0\n0,1\n", BasisKind::Custom).is_err());
        assert!(parse_basis_csv("1,0\n0,1,0\n", BasisKind::Custom).is_err());
    }

    #[test]
    fn activation_header_detection() {
        let with = parse_activations_csv("x,y\n1,2\n3,4\n").unwrap();
        let without = parse_activations_csv("1,2\n3,4\n").unwrap();
        assert_eq!(with, without);
        assert_eq!(with.nrows(), 2);
        assert!(parse_activations_csv("1,2\nfoo,4\n").is_err());
        assert!(matches!(parse_activations_csv("a,b\n"), Err(SrmError::EmptyDataset)));
    }
}
