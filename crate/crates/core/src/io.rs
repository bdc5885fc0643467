//! CSV point files and JSON sidecars.
//!
//! A point file has the header `y1,...,yn` or `y1,...,yn,f` and one point per
//! row, `y0` first. The radius lives outside the file, either on the command
//! line or in a sidecar `{"delta": <real>}`.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SampleSet;

/// Points and, when the file has an `f` column, their function values.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFile {
    pub points: Vec<Vec<f64>>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub delta: f64,
}

fn parse_err(path: &Path, row: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        row,
        msg: msg.into(),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Reads a point file. Row numbers in errors count the header as row 1.
pub fn read_points(path: &Path) -> Result<PointFile> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let has_f = header.last().map(String::as_str) == Some("f");
    let n = header.len() - usize::from(has_f);
    if n == 0 {
        return Err(parse_err(path, 1, "header must name at least one coordinate y1"));
    }
    for (i, name) in header[..n].iter().enumerate() {
        if *name != format!("y{}", i + 1) {
            return Err(parse_err(
                path,
                1,
                format!("expected column y{}, found `{name}`", i + 1),
            ));
        }
    }
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse_err(path, row, e.to_string()))?;
        if record.len() != header.len() {
            return Err(parse_err(
                path,
                row,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let mut nums = Vec::with_capacity(record.len());
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, row, format!("`{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(path, row, format!("`{field}` is not finite")));
            }
            nums.push(v);
        }
        if has_f {
            values.push(nums.pop().expect("nonempty row"));
        }
        points.push(nums);
    }
    if points.is_empty() {
        return Err(parse_err(path, 2, "no points"));
    }
    Ok(PointFile {
        points,
        values: has_f.then_some(values),
    })
}

/// Writes points (and values, if given) in the point-file format.
pub fn write_points<W: Write>(out: W, points: &[Vec<f64>], values: Option<&[f64]>) -> Result<()> {
    let n = points.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=n).map(|i| format!("y{i}")).collect();
    if values.is_some() {
        header.push("f".into());
    }
    w.write_record(&header)?;
    for (i, y) in points.iter().enumerate() {
        let mut row: Vec<String> = y.iter().map(f64::to_string).collect();
        if let Some(v) = values {
            row.push(v[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    Ok(serde_json::from_reader(open(path)?)?)
}

/// The sidecar next to a point file: same stem, `.json` extension.
pub fn sidecar_path(points: &Path) -> PathBuf {
    points.with_extension("json")
}

/// δ from an explicit value, else from `meta`, else from the default sidecar.
pub fn resolve_delta(points: &Path, delta: Option<f64>, meta: Option<&Path>) -> Result<f64> {
    if let Some(d) = delta {
        return Ok(d);
    }
    let path = meta.map_or_else(|| sidecar_path(points), Path::to_path_buf);
    if !path.exists() {
        return Err(Error::InvalidInput(format!(
            "no --delta given and no sidecar at {}",
            path.display()
        )));
    }
    Ok(read_sidecar(&path)?.delta)
}

/// Reads a point file into a sample set of radius `delta`.
pub fn read_sample_set(path: &Path, delta: f64) -> Result<(SampleSet, Option<Vec<f64>>)> {
    let file = read_points(path)?;
    Ok((SampleSet::new(file.points, delta)?, file.values))
}

/// A single-column CSV with header `gamma`.
pub fn read_gamma(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let header = rdr.headers()?.clone();
    if header.len() != 1 || &header[0] != "gamma" {
        return Err(parse_err(path, 1, "expected a single column named gamma"));
    }
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse_err(path, row, e.to_string()))?;
        let field = record.get(0).unwrap_or("");
        out.push(
            field
                .parse()
                .map_err(|_| parse_err(path, row, format!("`{field}` is not a number")))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str, body: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("dfo-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn round_trip_with_values() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let mut buf = Vec::new();
        write_points(&mut buf, &pts, Some(&[0.0, 1.0, 1.0])).unwrap();
        let path = tmp("rt.csv", std::str::from_utf8(&buf).unwrap());
        let file = read_points(&path).unwrap();
        assert_eq!(file.points, pts);
        assert_eq!(file.values, Some(vec![0.0, 1.0, 1.0]));
    }

    #[test]
    fn bad_row_is_named() {
        let path = tmp("bad.csv", "y1,y2\n0,0\n1,zz\n");
        match read_points(&path) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        let path = tmp("hdr.csv", "x1,x2\n0,0\n");
        assert!(matches!(read_points(&path), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn delta_from_sidecar() {
        let pts = tmp("side.csv", "y1\n0\n1\n");
        std::fs::write(sidecar_path(&pts), r#"{"delta": 1.5}"#).unwrap();
        assert_eq!(resolve_delta(&pts, None, None).unwrap(), 1.5);
        assert_eq!(resolve_delta(&pts, Some(2.0), None).unwrap(), 2.0);
        let gamma = tmp("g.csv", "gamma\n1\n2.5\n");
        assert_eq!(read_gamma(&gamma).unwrap(), vec![1.0, 2.5]);
    }
}
