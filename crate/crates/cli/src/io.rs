//! Headerless CSV matrices in and out.
//!
//! Floats are written with the shortest representation that parses back to
//! the same `f64`, so every matrix file round-trips exactly.

use std::fs;
use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::manifest::InputChecksum;

pub const MISSING: &str = "NA";

fn read_cells<T>(
    path: &Path,
    flag: &str,
    what: &str,
    mut parse: impl FnMut(&str) -> Option<T>,
) -> Result<Array2<T>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::input(format!("{flag}: cannot open {}: {e}", path.display())))?;
    let mut cells = Vec::new();
    let (mut rows, mut cols) = (0, 0);
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::input(format!("{flag}: {}: {e}", path.display())))?;
        cols = record.len();
        for (j, field) in record.iter().enumerate() {
            let value = parse(field).ok_or_else(|| {
                CliError::input(format!(
                    "{flag}: {} row {}, column {}: expected {what}, found {field:?}",
                    path.display(),
                    i + 1,
                    j + 1
                ))
            })?;
            cells.push(value);
        }
        rows += 1;
    }
    if rows == 0 || cols == 0 {
        return Err(CliError::input(format!("{flag}: {} is empty", path.display())));
    }
    Array2::from_shape_vec((rows, cols), cells).map_err(|e| CliError::input(format!("{flag}: {}: {e}", path.display())))
}

/// Integer categories, with `NA` marking missing cells as `None`.
pub fn read_responses(path: &Path, flag: &str) -> Result<Array2<Option<u16>>, CliError> {
    read_cells(path, flag, "a non-negative integer or NA", |field| {
        if field == MISSING {
            Some(None)
        } else {
            field.parse().ok().map(Some)
        }
    })
}

pub fn read_mask(path: &Path, flag: &str) -> Result<Array2<bool>, CliError> {
    read_cells(path, flag, "0 or 1", |field| match field {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    })
}

pub fn read_reals(path: &Path, flag: &str) -> Result<Array2<f64>, CliError> {
    read_cells(path, flag, "a finite number", |field| field.parse::<f64>().ok().filter(|x| x.is_finite()))
}

pub fn format_real(x: f64) -> String {
    format!("{x:?}")
}

pub fn write_rows<I, R>(path: &Path, header: Option<&[&str]>, rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut writer = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    if let Some(header) = header {
        writer.write_record(header).map_err(|e| CliError::io(path, e))?;
    }
    for row in rows {
        writer.write_record(row).map_err(|e| CliError::io(path, e))?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_matrix(path: &Path, matrix: ArrayView2<f64>) -> Result<(), CliError> {
    write_rows(path, None, matrix.rows().into_iter().map(|row| row.iter().map(|&x| format_real(x)).collect::<Vec<_>>()))
}

pub fn write_column(path: &Path, values: ArrayView1<f64>) -> Result<(), CliError> {
    write_rows(path, None, values.iter().map(|&x| vec![format_real(x)]))
}

pub fn checksum(path: &Path, flag: &str) -> Result<InputChecksum, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::input(format!("{flag}: cannot read {}: {e}", path.display())))?;
    Ok(InputChecksum { path: path.display().to_string(), sha256: format!("{:x}", Sha256::digest(&bytes)) })
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn reals_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = array![[0.1, -1.0 / 3.0, 1e-300], [f64::MAX, 5e-324, 123456789.0]];
        write_matrix(&path, m.view()).unwrap();
        assert_eq!(read_reals(&path, "--x").unwrap(), m);
    }

    #[test]
    fn responses_accept_na_and_reject_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.csv");
        fs::write(&path, "1,0,NA\n0, 2 ,1\n").unwrap();
        let y = read_responses(&path, "--input").unwrap();
        assert_eq!(y[[0, 2]], None);
        assert_eq!(y[[1, 1]], Some(2));

        fs::write(&path, "1,0\n0,x\n").unwrap();
        let err = read_responses(&path, "--input").unwrap_err();
        assert!(err.message.contains("row 2, column 2"), "{}", err.message);
        fs::write(&path, "1,0\n0\n").unwrap();
        assert_eq!(read_responses(&path, "--input").unwrap_err().code, 2);
        fs::write(&path, "").unwrap();
        assert_eq!(read_responses(&path, "--input").unwrap_err().code, 2);
    }
}
