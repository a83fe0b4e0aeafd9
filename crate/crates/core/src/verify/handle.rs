use std::process::Command;

use serde::{Deserialize, Serialize};

use crate::cl::{self, Schedule};
use crate::error::{Error, Result};
use crate::grid::{CellField, Grid, NodeField};
use crate::hj;
use crate::io;
use crate::junction::JunctionModel;

/// Which equation a semi-group acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Cl,
    Hj,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandleKind {
    ClInternal,
    HjInternal,
    /// A program called as `command... <state.csv> <t> <out.csv>` that writes the state
    /// evolved by `t` to `out.csv`.
    ExternalProcess {
        command: Vec<String>,
        equation: Equation,
    },
}

/// A semi-group under test together with the fluxes it is meant to realize and the
/// resolution at which it is probed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupHandle {
    pub kind: HandleKind,
    /// Fluxes of both sides. The limiter is only used by the internal solvers.
    pub model: JunctionModel,
    pub dx: f64,
    pub cfl: f64,
    /// Probe domain `[-half_width, half_width]`.
    pub half_width: f64,
}

impl SemigroupHandle {
    pub fn new(kind: HandleKind, model: JunctionModel, dx: f64, cfl: f64) -> Result<Self> {
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::Precondition(format!("resolution must be positive, got {dx}")));
        }
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::Precondition(format!("cfl must be in (0, 1], got {cfl}")));
        }
        if let HandleKind::ExternalProcess { command, .. } = &kind {
            if command.is_empty() {
                return Err(Error::Precondition("external command is empty".into()));
            }
        }
        Ok(Self {
            kind,
            model,
            dx,
            cfl,
            half_width: 2.0,
        })
    }

    pub fn cl_internal(model: JunctionModel, dx: f64, cfl: f64) -> Result<Self> {
        Self::new(HandleKind::ClInternal, model, dx, cfl)
    }

    pub fn hj_internal(model: JunctionModel, dx: f64, cfl: f64) -> Result<Self> {
        Self::new(HandleKind::HjInternal, model, dx, cfl)
    }

    pub fn with_half_width(mut self, half_width: f64) -> Self {
        self.half_width = half_width;
        self
    }

    pub fn with_resolution(&self, dx: f64) -> Self {
        Self { dx, ..self.clone() }
    }

    pub fn equation(&self) -> Equation {
        match &self.kind {
            HandleKind::ClInternal => Equation::Cl,
            HandleKind::HjInternal => Equation::Hj,
            HandleKind::ExternalProcess { equation, .. } => *equation,
        }
    }

    pub fn is_internal(&self) -> bool {
        !matches!(self.kind, HandleKind::ExternalProcess { .. })
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::symmetric(self.half_width, self.dx)
    }

    pub fn grid_with_half_width(&self, half_width: f64) -> Result<Grid> {
        Grid::symmetric(half_width, self.dx)
    }

    pub fn dt_max(&self) -> f64 {
        cl::max_dt(&self.model, self.dx, self.cfl)
    }

    /// Number of explicit steps the internal solvers take to reach `t`.
    pub fn steps(&self, t: f64) -> usize {
        Schedule::new(t, self.dt_max(), &[]).map_or(0, |s| s.len())
    }

    fn require(&self, eq: Equation) -> Result<()> {
        if self.equation() == eq {
            Ok(())
        } else {
            Err(Error::Protocol(format!(
                "handle acts on {:?}, check needs {eq:?}",
                self.equation()
            )))
        }
    }

    pub fn evolve_cl(&self, rho: &CellField, t: f64) -> Result<CellField> {
        self.require(Equation::Cl)?;
        if t == 0.0 {
            return Ok(rho.clone());
        }
        match &self.kind {
            HandleKind::ClInternal => {
                let run = cl::solve(rho, &self.model, t, self.cfl, &[])?;
                let mut out = run.last().clone();
                out.time = rho.time + t;
                Ok(out)
            }
            HandleKind::ExternalProcess { command, .. } => {
                let dir = tempfile::tempdir()?;
                let input = dir.path().join("state.csv");
                let output = dir.path().join("out.csv");
                io::save_cells(&input, rho)?;
                run_external(command, &input, t, &output)?;
                let mut out = io::load_cells(&output, &self.model)?;
                if !out.grid.same_as(&rho.grid) {
                    return Err(Error::Protocol("external output changed the grid".into()));
                }
                out.time = rho.time + t;
                Ok(out)
            }
            HandleKind::HjInternal => unreachable!("checked by require"),
        }
    }

    pub fn evolve_hj(&self, u: &NodeField, t: f64) -> Result<NodeField> {
        self.require(Equation::Hj)?;
        if t == 0.0 {
            return Ok(u.clone());
        }
        match &self.kind {
            HandleKind::HjInternal => {
                let mut out = hj::hj_direct_solve(u, &self.model, t, self.cfl)?;
                out.time = u.time + t;
                Ok(out)
            }
            HandleKind::ExternalProcess { command, .. } => {
                let dir = tempfile::tempdir()?;
                let input = dir.path().join("state.csv");
                let output = dir.path().join("out.csv");
                io::save_nodes(&input, u)?;
                run_external(command, &input, t, &output)?;
                let mut out = io::load_nodes(&output)?;
                if !out.grid.same_as(&u.grid) {
                    return Err(Error::Protocol("external output changed the grid".into()));
                }
                out.time = u.time + t;
                Ok(out)
            }
            HandleKind::ClInternal => unreachable!("checked by require"),
        }
    }
}

fn run_external(
    command: &[String],
    input: &std::path::Path,
    t: f64,
    output: &std::path::Path,
) -> Result<()> {
    let status = Command::new(&command[0])
        .args(&command[1..])
        .arg(input)
        .arg(t.to_string())
        .arg(output)
        .status()
        .map_err(|e| Error::Protocol(format!("cannot run `{}`: {e}", command[0])))?;
    if !status.success() {
        return Err(Error::Protocol(format!("`{}` exited with {status}", command[0])));
    }
    if !output.exists() {
        return Err(Error::Protocol("external command wrote no output".into()));
    }
    Ok(())
}
