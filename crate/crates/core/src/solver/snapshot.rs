//! Snapshot files: CSV for 1-D and 2-D fields, raw little-endian `f64`
//! plus a `key = value` text sidecar for 3-D and above.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{Grid, ScalarField, SolverError};

/// Writes `field` next to `stem` and returns the files created
/// (`stem.csv`, or `stem.bin` + `stem.txt`).
pub fn write_snapshot(field: &ScalarField, stem: &Path) -> Result<Vec<PathBuf>, SolverError> {
    let grid = field.grid();
    if grid.dim() <= 2 {
        let path = stem.with_extension("csv");
        let mut out = String::new();
        out.push_str(&format!("# t = {:e}\n", field.time()));
        out.push_str(if grid.dim() == 1 {
            "x1,u\n"
        } else {
            "x1,x2,u\n"
        });
        let mut idx = vec![0; grid.dim()];
        for (flat, v) in field.values().iter().enumerate() {
            grid.multi_index(flat, &mut idx);
            for (axis, &k) in idx.iter().enumerate() {
                out.push_str(&format!("{:e},", grid.center(axis, k)));
            }
            out.push_str(&format!("{v:e}\n"));
        }
        fs::write(&path, out)?;
        Ok(vec![path])
    } else {
        let bin = stem.with_extension("bin");
        let meta = stem.with_extension("txt");
        let mut bytes = Vec::with_capacity(8 * field.values().len());
        for v in field.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(&bin, bytes)?;
        let mut f = fs::File::create(&meta)?;
        writeln!(f, "dim = {}", grid.dim())?;
        writeln!(f, "cells = {}", join(grid.cells().iter()))?;
        writeln!(
            f,
            "half_widths = {}",
            join(grid.half_widths().iter().map(|l| format!("{l:e}")))
        )?;
        writeln!(f, "time = {:e}", field.time())?;
        writeln!(f, "dtype = f64le")?;
        writeln!(f, "layout = row-major, last axis fastest")?;
        writeln!(
            f,
            "data = {}",
            bin.file_name().and_then(|s| s.to_str()).unwrap_or_default()
        )?;
        Ok(vec![bin, meta])
    }
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Reads a 3-D snapshot back from its sidecar (`stem.txt`).
pub fn read_binary_snapshot(sidecar: &Path) -> Result<ScalarField, SolverError> {
    let text = fs::read_to_string(sidecar)?;
    let get = |key: &str| -> Result<&str, SolverError> {
        text.lines()
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == key)
            .map(|(_, v)| v.trim())
            .ok_or_else(|| SolverError::Format(format!("sidecar lacks `{key}`")))
    };
    let bad = |what: &str| SolverError::Format(format!("cannot parse {what}"));
    let cells: Vec<usize> = get("cells")?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad("cells")))
        .collect::<Result<_, _>>()?;
    let half: Vec<f64> = get("half_widths")?
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| bad("half_widths")))
        .collect::<Result<_, _>>()?;
    let time: f64 = get("time")?.parse().map_err(|_| bad("time"))?;
    if get("dtype")? != "f64le" {
        return Err(SolverError::Format("only f64le data is supported".into()));
    }
    let data = sidecar.with_file_name(get("data")?);
    let bytes = fs::read(data)?;
    if bytes.len() % 8 != 0 {
        return Err(SolverError::Format(
            "data length is not a multiple of 8".into(),
        ));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let grid = Arc::new(Grid::with_cap(half, cells, usize::MAX)?);
    ScalarField::from_values(grid, values, time)
}

/// Reads the value column of a CSV snapshot on a known grid.
pub fn read_csv_snapshot(path: &Path, grid: Arc<Grid>) -> Result<ScalarField, SolverError> {
    let text = fs::read_to_string(path)?;
    let mut time = 0.0;
    let mut values = Vec::with_capacity(grid.len());
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# t =") {
            time = rest
                .trim()
                .parse()
                .map_err(|_| SolverError::Format("bad time line".into()))?;
            continue;
        }
        if line.starts_with('x') || line.trim().is_empty() {
            continue;
        }
        let v = line
            .rsplit(',')
            .next()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| SolverError::Format(format!("bad row `{line}`")))?;
        values.push(v);
    }
    ScalarField::from_values(grid, values, time)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Arc::new(Grid::new(vec![1.0, 2.0, 0.5], vec![4, 5, 6]).unwrap());
        let f = ScalarField::from_fn(grid, |x| x[0] + 10.0 * x[1] - x[2]).with_time(0.125);
        let files = write_snapshot(&f, &dir.path().join("snap")).unwrap();
        assert_eq!(files.len(), 2);
        let back = read_binary_snapshot(&files[1]).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Arc::new(Grid::new(vec![1.0, 1.0], vec![6, 4]).unwrap());
        let f = ScalarField::from_fn(grid.clone(), |x| x[0] * x[1]).with_time(2.0);
        let files = write_snapshot(&f, &dir.path().join("snap")).unwrap();
        let text = fs::read_to_string(&files[0]).unwrap();
        assert!(text.lines().nth(1).unwrap() == "x1,x2,u");
        let back = read_csv_snapshot(&files[0], grid).unwrap();
        assert_eq!(back, f);
    }
}
