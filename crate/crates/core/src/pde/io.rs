//! Field serialization.
//!
//! CSV layout: one header row `dims=AxB,h=hxXhy,extents=LxXLy`, then the node
//! values row-major (axis 0 along each row; for three dimensions the rows
//! walk axis 1 fastest, then axis 2). LF line endings, `.` decimals.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::domain::{Domain, OuterBoundary};
use crate::pde::field::ScalarField;
use crate::pde::grid::Grid;
use crate::scalar::Real;

/// Scalar results of one solve, written next to the field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub compliance: f64,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn join<X: std::fmt::Display>(xs: &[X]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("x")
}

pub fn field_to_csv<T: Real>(field: &ScalarField<T>) -> String {
    let grid = field.grid();
    let dims: Vec<usize> = grid.cells().iter().map(|c| c + 1).collect();
    let mut out = format!(
        "dims={},h={},extents={}\n",
        join(&dims),
        join(grid.spacing()),
        join(grid.domain().extents())
    );
    let row = grid.nodes()[0];
    for chunk in field.values().chunks(row) {
        let line: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

pub fn field_from_csv<T: Real>(text: &str) -> Result<ScalarField<T>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?;
    let mut dims: Option<Vec<usize>> = None;
    let mut extents: Option<Vec<T>> = None;
    for part in header.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("malformed header entry '{part}'")))?;
        match key.trim() {
            "dims" => {
                dims = Some(
                    value
                        .split('x')
                        .map(|s| s.trim().parse::<usize>().map_err(|e| Error::Parse(e.to_string())))
                        .collect::<Result<_>>()?,
                )
            }
            "extents" => {
                extents = Some(
                    value
                        .split('x')
                        .map(|s| {
                            s.trim()
                                .parse::<f64>()
                                .map(T::lit)
                                .map_err(|e| Error::Parse(e.to_string()))
                        })
                        .collect::<Result<_>>()?,
                )
            }
            "h" => {}
            other => return Err(Error::Parse(format!("unknown header key '{other}'"))),
        }
    }
    let dims = dims.ok_or_else(|| Error::Parse("header lacks dims".into()))?;
    let extents = extents.ok_or_else(|| Error::Parse("header lacks extents".into()))?;
    let domain = Domain::new(extents, OuterBoundary::Dirichlet)?;
    let cells: Vec<usize> = dims.iter().map(|&n| n.saturating_sub(1)).collect();
    let grid = Grid::new(domain, &cells)?;
    let mut values = Vec::with_capacity(grid.len());
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        for cell in line.split(',') {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            values.push(T::lit(v));
        }
    }
    ScalarField::new(grid, values)
}
