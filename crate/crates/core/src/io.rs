//! On-disk formats: a return matrix is CSV with one row per asset and `p`
//! comma-separated entries; the companion variances file holds one value
//! per line. Values are written with Rust's shortest round-trip float
//! formatting, so write/read/write is byte-stable.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::ReturnMatrix;

pub fn write_matrix_csv(x: &ReturnMatrix, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>, text: String| {
        out.write_all(text.as_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))
    };
    for i in 0..x.n_assets() {
        let row: Vec<String> = x.entries().row(i).iter().map(|v| format!("{v}")).collect();
        write(&mut out, row.join(","))?;
        write(&mut out, "\n".into())?;
    }
    out.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn write_variances(variances: &[f64], path: &Path) -> Result<()> {
    let body: String = variances.iter().map(|s| format!("{s}\n")).collect();
    std::fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_matrix_csv(matrix_path: &Path, variances_path: &Path) -> Result<ReturnMatrix> {
    let rows = read_rows(matrix_path)?;
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse {
            path: matrix_path.display().to_string(),
            line: 1,
            message: "matrix file contains no rows".into(),
        });
    }
    let p = rows[0].len();
    for (idx, row) in rows.iter().enumerate() {
        if row.len() != p {
            return Err(Error::Parse {
                path: matrix_path.display().to_string(),
                line: idx + 1,
                message: format!("expected {p} entries per row, found {}", row.len()),
            });
        }
    }
    let variances = read_variances(variances_path)?;
    if variances.len() != n {
        return Err(Error::Parse {
            path: variances_path.display().to_string(),
            line: variances.len(),
            message: format!(
                "expected one variance per asset row ({n}), found {}",
                variances.len()
            ),
        });
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    ReturnMatrix::new(DMatrix::from_row_slice(n, p, &flat), variances)
}

pub fn read_variances(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut values = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let value: f64 = text.parse().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            message: format!("cannot parse {text:?} as a real number"),
        })?;
        values.push(value);
    }
    Ok(values)
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.display().to_string(),
                    line: idx + 1,
                    message: format!("cannot parse {:?} as a real number", cell.trim()),
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    Ok(rows)
}
