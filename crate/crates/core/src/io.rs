//! CSV ingestion for datasets and design matrices.
//!
//! A dataset file has a header row with a `y` column and, optionally, a
//! `sigma` column of per-point error bars; other columns are ignored. A
//! design file has a header row naming the columns, and every column is
//! numeric. Errors name the file, the 1-based line, and the column.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::regression::Dataset;

/// Response values and, when present, the `sigma` column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataColumns {
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl DataColumns {
    /// The dataset with error bars attached if the file had them.
    pub fn into_dataset(self) -> Result<Dataset> {
        match self.sigma {
            Some(s) => Dataset::with_error_bars(self.y, s),
            None => Dataset::new(self.y),
        }
    }
}

pub fn read_data_columns(path: impl AsRef<Path>) -> Result<DataColumns> {
    let path = path.as_ref();
    let file = path.display().to_string();
    let mut rdr = open(path)?;
    let header = headers(&mut rdr, &file)?;
    let find = |name: &str| header.iter().position(|h| h.trim() == name);
    let yi = find("y").ok_or_else(|| Error::Parse {
        file: file.clone(),
        row: 1,
        column: "y".into(),
        message: "missing required column".into(),
    })?;
    let si = find("sigma");
    let mut y = Vec::new();
    let mut sigma = si.map(|_| Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_error(&file, line, e))?;
        y.push(cell(&rec, yi, &header, &file, line)?);
        if let (Some(si), Some(s)) = (si, sigma.as_mut()) {
            s.push(cell(&rec, si, &header, &file, line)?);
        }
    }
    if y.is_empty() {
        return Err(Error::Parse {
            file,
            row: 2,
            column: "y".into(),
            message: "no data rows".into(),
        });
    }
    Ok(DataColumns { y, sigma })
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_data_columns(path)?.into_dataset()
}

pub fn read_design(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let file = path.display().to_string();
    let mut rdr = open(path)?;
    let header = headers(&mut rdr, &file)?;
    let k = header.len();
    let mut values = Vec::new();
    let mut n = 0;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_error(&file, line, e))?;
        if rec.len() != k {
            return Err(Error::Parse {
                file,
                row: line,
                column: header
                    .get(rec.len().min(k.saturating_sub(1)))
                    .cloned()
                    .unwrap_or_default(),
                message: format!("expected {k} fields, found {}", rec.len()),
            });
        }
        for j in 0..k {
            values.push(cell(&rec, j, &header, &file, line)?);
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::Parse {
            file,
            row: 2,
            column: header.first().cloned().unwrap_or_default(),
            message: "no data rows".into(),
        });
    }
    Ok(DMatrix::from_row_slice(n, k, &values))
}

/// Write a design matrix with columns named x1, x2, ….
pub fn write_design(path: impl AsRef<Path>, design: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    let header: Vec<String> = (1..=design.ncols()).map(|j| format!("x{j}")).collect();
    w.write_record(&header).map_err(|e| io_error(path, e))?;
    for row in design.row_iter() {
        w.write_record(row.iter().map(|v| format!("{v:e}")))
            .map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Write a dataset with a `y` column and, if present, `sigma`.
pub fn write_dataset(path: impl AsRef<Path>, y: &[f64], sigma: Option<&[f64]>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    let header: &[&str] = if sigma.is_some() { &["y", "sigma"] } else { &["y"] };
    w.write_record(header).map_err(|e| io_error(path, e))?;
    for (i, v) in y.iter().enumerate() {
        let mut rec = vec![format!("{v:e}")];
        if let Some(s) = sigma {
            rec.push(format!("{:e}", s[i]));
        }
        w.write_record(&rec).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(f))
}

fn headers(rdr: &mut csv::Reader<std::fs::File>, file: &str) -> Result<Vec<String>> {
    let h = rdr.headers().map_err(|e| csv_error(file, 1, e))?;
    if h.is_empty() || h.iter().all(str::is_empty) {
        return Err(Error::Parse {
            file: file.into(),
            row: 1,
            column: String::new(),
            message: "missing header row".into(),
        });
    }
    Ok(h.iter().map(str::to_string).collect())
}

fn cell(rec: &csv::StringRecord, j: usize, header: &[String], file: &str, line: usize) -> Result<f64> {
    let column = header[j].clone();
    let raw = rec.get(j).ok_or_else(|| Error::Parse {
        file: file.into(),
        row: line,
        column: column.clone(),
        message: "missing field".into(),
    })?;
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            file: file.into(),
            row: line,
            column,
            message: format!("not a finite number: `{raw}`"),
        }),
    }
}

fn csv_error(file: &str, line: usize, e: csv::Error) -> Error {
    Error::Parse {
        file: file.into(),
        row: e.position().map_or(line, |p| p.line() as usize),
        column: String::new(),
        message: e.to_string(),
    }
}

fn io_error(path: &Path, e: csv::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn dataset_with_and_without_error_bars() {
        let f = file("y,sigma\n1.0,0.5\n3,2\n");
        let ds = read_dataset(f.path()).unwrap();
        assert_eq!(ds.y(), &[1.0, 3.0]);
        assert_eq!(ds.error_bars(), Some(&[0.5, 2.0][..]));

        let f = file("x,y\n0,1.5\n1,2.5\n");
        let ds = read_dataset(f.path()).unwrap();
        assert_eq!(ds.y(), &[1.5, 2.5]);
        assert!(ds.error_bars().is_none());
    }

    #[test]
    fn design_matrix() {
        let f = file("one,x\n1,0\n1,1\n1,2\n");
        let x = read_design(f.path()).unwrap();
        assert_eq!(x.shape(), (3, 2));
        assert_eq!(x[(2, 1)], 2.0);
    }

    #[test]
    fn errors_name_file_row_and_column() {
        let f = file("one,x\n1,0\n1,abc\n");
        match read_design(f.path()) {
            Err(Error::Parse { file, row, column, .. }) => {
                assert!(file.contains(f.path().file_name().unwrap().to_str().unwrap()));
                assert_eq!((row, column.as_str()), (3, "x"));
            }
            other => panic!("{other:?}"),
        }
        let f = file("value\n1\n");
        assert!(matches!(read_dataset(f.path()), Err(Error::Parse { column, .. }) if column == "y"));
        let f = file("one,x\n1,0\n1\n");
        assert!(matches!(read_design(f.path()), Err(Error::Parse { row: 3, .. })));
        assert!(matches!(read_design("/nonexistent/design.csv"), Err(Error::Io { .. })));
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.1, 1.0, -2.5, 1.0, 1e-7]);
        let p = dir.path().join("d.csv");
        write_design(&p, &x).unwrap();
        assert_eq!(read_design(&p).unwrap(), x);
        let q = dir.path().join("y.csv");
        write_dataset(&q, &[1.0, 2.0 / 3.0], Some(&[1.0, 0.25])).unwrap();
        let back = read_data_columns(&q).unwrap();
        assert_eq!(back.y, vec![1.0, 2.0 / 3.0]);
        assert_eq!(back.sigma, Some(vec![1.0, 0.25]));
    }
}
