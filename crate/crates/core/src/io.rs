//! The `GF1` text format and CSV exports.
//!
//! ```text
//! GF1 dim=<N> M=<M> L=<L>
//! v_0 v_1 ... (M^N whitespace-separated decimals, row-major)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction, SignedField};

fn parse_header(line: &str) -> Result<Grid> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some("GF1") {
        return Err(Error::Parse("missing GF1 magic".into()));
    }
    let (mut dim, mut m, mut l) = (None, None, None);
    for kv in parts {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad header field {kv:?}")))?;
        let bad = |_| Error::Parse(format!("bad value in {kv:?}"));
        match k {
            "dim" => dim = Some(v.parse::<usize>().map_err(bad)?),
            "M" => m = Some(v.parse::<usize>().map_err(bad)?),
            "L" => l = Some(v.parse::<f64>().map_err(|_| Error::Parse(format!("bad value in {kv:?}")))?),
            _ => return Err(Error::Parse(format!("unknown header field {k:?}"))),
        }
    }
    match (dim, m, l) {
        (Some(d), Some(m), Some(l)) => Grid::new(d, m, l),
        _ => Err(Error::Parse("header needs dim, M and L".into())),
    }
}

fn parse_values(text: &str) -> Result<(Grid, Vec<f64>)> {
    let mut lines = text.lines();
    let header = lines
        .by_ref()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| Error::Parse("empty GF1 input".into()))?;
    let grid = parse_header(header)?;
    let values = lines
        .flat_map(str::split_whitespace)
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad value {t:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != grid.len() {
        return Err(Error::Parse(format!(
            "expected {} values, found {}",
            grid.len(),
            values.len()
        )));
    }
    Ok((grid, values))
}

/// Parses GF1 text; negative values and even `M` are rejected.
pub fn parse_gf1(text: &str) -> Result<GridFunction> {
    let (grid, values) = parse_values(text)?;
    GridFunction::new(grid, values)
}

/// Parses GF1 text allowing signed values.
pub fn parse_gf1_signed(text: &str) -> Result<SignedField> {
    let (grid, values) = parse_values(text)?;
    SignedField::new(grid, values)
}

fn format_grid(grid: &Grid, values: &[f64]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "GF1 dim={} M={} L={}",
        grid.dim(),
        grid.cells_per_axis(),
        grid.extent()
    )
    .unwrap();
    let row = if grid.dim() == 1 { 1 } else { grid.cells_per_axis() };
    for chunk in values.chunks(row) {
        let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    out
}

pub fn format_gf1(u: &GridFunction) -> String {
    format_grid(u.grid(), u.values())
}

pub fn read_gf1(path: impl AsRef<Path>) -> Result<GridFunction> {
    parse_gf1(&std::fs::read_to_string(path)?)
}

pub fn read_gf1_signed(path: impl AsRef<Path>) -> Result<SignedField> {
    parse_gf1_signed(&std::fs::read_to_string(path)?)
}

pub fn write_gf1(path: impl AsRef<Path>, u: &GridFunction) -> Result<()> {
    std::fs::write(path, format_gf1(u))?;
    Ok(())
}

/// Cell-center coordinates and value, one row per cell.
pub fn format_csv(u: &GridFunction) -> String {
    let grid = u.grid();
    let mut out = String::from(if grid.dim() == 1 { "x,value\n" } else { "x,y,value\n" });
    for (i, v) in u.values().iter().enumerate() {
        let c = grid.center(i);
        if grid.dim() == 1 {
            writeln!(out, "{},{}", c[0], v).unwrap();
        } else {
            writeln!(out, "{},{},{}", c[0], c[1], v).unwrap();
        }
    }
    out
}
