//! CSV and JSON artifacts.
//!
//! Numbers are written in the shortest form that parses back to the same
//! `f64`, so every file round-trips bit for bit.
//!
//! Flux CSV: header `t,node_<i>,...`, one row per grid time. Grid CSV (nodal
//! fields): one row per `y` line, `x` running along the row.

use std::path::Path;

use fracsrc::elliptic::{BoundarySubset, DomainSpec};
use fracsrc::forward::FluxTrace;
use fracsrc::fractional::TimeGrid;
use fracsrc::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite floats serialize")
    } else {
        x.to_string()
    }
}

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Columns of equal length under a header.
pub fn write_columns(path: &Path, header: &[String], columns: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    let rows = columns.first().map_or(0, Vec::len);
    for j in 0..rows {
        w.write_record(columns.iter().map(|c| fmt_f64(c[j]))).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_flux_csv(path: &Path, flux: &FluxTrace) -> Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend(flux.boundary.nodes().iter().map(|n| format!("node_{n}")));
    let mut cols = vec![flux.grid.nodes()];
    cols.extend(flux.values.iter().cloned());
    write_columns(path, &header, &cols)
}

fn parse(path: &Path, s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| csv_err(path, format!("{s:?}: {e}")))
}

/// Header and columns of a numeric CSV.
pub fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_string).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        for (c, field) in cols.iter_mut().zip(rec.iter()) {
            c.push(parse(path, field)?);
        }
    }
    Ok((header, cols))
}

/// Inverse of [`write_flux_csv`]. The time step is the second time stamp,
/// which the writer stores exactly.
pub fn read_flux_csv(path: &Path, domain: &DomainSpec) -> Result<FluxTrace> {
    let (header, mut cols) = read_columns(path)?;
    if header.first().map(String::as_str) != Some("t") || header.len() < 2 {
        return Err(csv_err(path, "expected a header `t,node_<i>,...`"));
    }
    let nodes = header[1..]
        .iter()
        .map(|h| {
            h.strip_prefix("node_")
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| csv_err(path, format!("bad column {h:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let t = cols.remove(0);
    if t.len() < 2 {
        return Err(csv_err(path, "need at least two time stamps"));
    }
    let grid = TimeGrid::new(t[1], t.len() - 1)?;
    let tol = 1e-9 * grid.t_max();
    if t.iter().enumerate().any(|(j, tj)| (tj - grid.t(j)).abs() > tol) {
        return Err(csv_err(path, "time stamps are not uniform"));
    }
    FluxTrace::new(BoundarySubset::new(domain, nodes)?, grid, cols)
}

/// Nodal field from a headerless grid CSV.
pub fn read_grid_csv(path: &Path, domain: &DomainSpec) -> Result<Vec<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        for field in rec.iter().filter(|f| !f.trim().is_empty()) {
            out.push(parse(path, field)?);
        }
    }
    if out.len() != domain.n_nodes() {
        return Err(csv_err(path, format!("{} values for {} nodes", out.len(), domain.n_nodes())));
    }
    Ok(out)
}

pub fn write_grid_csv(path: &Path, domain: &DomainSpec, values: &[f64]) -> Result<()> {
    let row = domain.cells(0) + 1;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(|e| csv_err(path, e))?;
    for chunk in values.chunks(row) {
        w.write_record(chunk.iter().map(|v| fmt_f64(*v))).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}
