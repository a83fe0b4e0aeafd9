//! CSV exchange format for states.
//!
//! Cell states have columns `x,rho,side` (cell centers); node states have columns
//! `x,u,side` with exactly one `junction` row at `x = 0`. Floats are written in
//! shortest round-trip form so a written state reads back bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{CellField, Grid, NodeField, Side};
use crate::junction::JunctionModel;

fn parse_side(s: &str) -> Result<Side> {
    match s.trim() {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        "junction" => Ok(Side::Junction),
        other => Err(Error::Protocol(format!("unknown side `{other}`"))),
    }
}

pub fn write_cells<W: Write>(w: W, state: &CellField) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "rho", "side"])?;
    for (i, v) in state.values.iter().enumerate() {
        out.write_record([
            state.grid.cell_center(i).to_string(),
            v.to_string(),
            state.side(i).as_str().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_nodes<W: Write>(w: W, state: &NodeField) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "u", "side"])?;
    for (k, v) in state.values.iter().enumerate() {
        out.write_record([
            state.grid.node_x(k).to_string(),
            v.to_string(),
            state.side(k).as_str().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn read_rows<R: Read>(r: R, value_column: &str) -> Result<Vec<(f64, f64, Side)>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Protocol(format!("missing column `{name}`")))
    };
    let (ix, iv, is) = (col("x")?, col(value_column)?, col("side")?);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            let s = rec.get(i).unwrap_or("").trim();
            s.parse::<f64>()
                .map_err(|_| Error::Protocol(format!("bad number `{s}`")))
        };
        rows.push((num(ix)?, num(iv)?, parse_side(rec.get(is).unwrap_or(""))?));
    }
    Ok(rows)
}

fn spacing(xs: &[f64]) -> Result<f64> {
    if xs.len() < 2 {
        return Err(Error::Protocol("need at least two rows".into()));
    }
    let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if !(dx > 0.0) {
        return Err(Error::Protocol("x must be increasing".into()));
    }
    Ok(dx)
}

pub fn read_cells<R: Read>(r: R, j: &JunctionModel) -> Result<CellField> {
    let rows = read_rows(r, "rho")?;
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let dx = spacing(&xs)?;
    let n_left = rows.iter().take_while(|r| r.2 == Side::Left).count();
    if rows[n_left..].iter().any(|r| r.2 != Side::Right) {
        return Err(Error::Protocol(
            "cell rows must be all left cells followed by all right cells".into(),
        ));
    }
    let grid = Grid::new(n_left, rows.len() - n_left, dx)
        .map_err(|e| Error::Protocol(e.to_string()))?;
    for (i, row) in rows.iter().enumerate() {
        if (grid.cell_center(i) - row.0).abs() > 1e-9 * dx.max(1.0) {
            return Err(Error::Protocol(format!(
                "cell {i} at x = {} is off the uniform grid with 0 on an interface",
                row.0
            )));
        }
    }
    CellField::new(grid, rows.iter().map(|r| r.1).collect(), 0.0, j)
}

pub fn read_nodes<R: Read>(r: R) -> Result<NodeField> {
    let rows = read_rows(r, "u")?;
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let dx = spacing(&xs)?;
    let n_left = rows.iter().take_while(|r| r.2 == Side::Left).count();
    if rows.get(n_left).map(|r| r.2) != Some(Side::Junction)
        || rows[n_left + 1..].iter().any(|r| r.2 != Side::Right)
    {
        return Err(Error::Protocol(
            "node rows must be left nodes, one junction node, then right nodes".into(),
        ));
    }
    let grid = Grid::new(n_left, rows.len() - n_left - 1, dx)
        .map_err(|e| Error::Protocol(e.to_string()))?;
    for (k, row) in rows.iter().enumerate() {
        if (grid.node_x(k) - row.0).abs() > 1e-9 * dx.max(1.0) {
            return Err(Error::Protocol(format!(
                "node {k} at x = {} is off the uniform grid",
                row.0
            )));
        }
    }
    NodeField::new(grid, rows.iter().map(|r| r.1).collect(), 0.0)
}

pub fn save_cells(path: &Path, state: &CellField) -> Result<()> {
    write_cells(std::fs::File::create(path)?, state)
}

pub fn load_cells(path: &Path, j: &JunctionModel) -> Result<CellField> {
    read_cells(std::fs::File::open(path)?, j)
}

pub fn save_nodes(path: &Path, state: &NodeField) -> Result<()> {
    write_nodes(std::fs::File::create(path)?, state)
}

pub fn load_nodes(path: &Path) -> Result<NodeField> {
    read_nodes(std::fs::File::open(path)?)
}
