//! Uniform two-sided grids with the junction pinned to a cell interface, and the
//! states that live on them: cell densities for the conservation law and node
//! values for the Hamilton-Jacobi equation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{CanonicalDatum, DENSITY_TOL};
use crate::junction::{JunctionModel, TracePair};

/// `n_left` cells on `[-n_left dx, 0]` and `n_right` cells on `[0, n_right dx]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n_left: usize,
    n_right: usize,
    dx: f64,
}

/// Report of how a requested domain was moved to put `x = 0` on a cell interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAdjustment {
    pub requested: [f64; 2],
    pub actual: [f64; 2],
}

impl Grid {
    pub fn new(n_left: usize, n_right: usize, dx: f64) -> Result<Self> {
        if n_left == 0 || n_right == 0 {
            return Err(Error::InvalidGrid("both sides need at least one cell".into()));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::InvalidGrid(format!("dx must be positive, got {dx}")));
        }
        Ok(Self { n_left, n_right, dx })
    }

    /// `[-half_width, half_width]` with spacing as close to `dx` as an integer cell
    /// count per side allows.
    pub fn symmetric(half_width: f64, dx: f64) -> Result<Self> {
        let n = (half_width / dx).round().max(1.0) as usize;
        Self::new(n, n, dx)
    }

    /// Splits `cells` over `[x_min, x_max]`, moving the ends so that 0 is an interface.
    pub fn from_domain(
        x_min: f64,
        x_max: f64,
        cells: usize,
    ) -> Result<(Self, Option<GridAdjustment>)> {
        if !(x_min < 0.0 && x_max > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain [{x_min}, {x_max}] must contain 0 in its interior"
            )));
        }
        if cells < 2 {
            return Err(Error::InvalidGrid("need at least two cells".into()));
        }
        let dx = (x_max - x_min) / cells as f64;
        let n_left = ((-x_min / dx).round() as usize).clamp(1, cells - 1);
        let grid = Self::new(n_left, cells - n_left, dx)?;
        let actual = [grid.x_min(), grid.x_max()];
        let moved = (actual[0] - x_min).abs() > 1e-12 * dx.max(1.0)
            || (actual[1] - x_max).abs() > 1e-12 * dx.max(1.0);
        let adjustment = moved.then(|| GridAdjustment {
            requested: [x_min, x_max],
            actual,
        });
        Ok((grid, adjustment))
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_cells(&self) -> usize {
        self.n_left + self.n_right
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells() + 1
    }

    pub fn x_min(&self) -> f64 {
        -(self.n_left as f64) * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.n_right as f64 * self.dx
    }

    /// Left edge of cell `i`, equivalently the position of node `i`.
    pub fn node_x(&self, k: usize) -> f64 {
        (k as f64 - self.n_left as f64) * self.dx
    }

    pub fn cell_center(&self, i: usize) -> f64 {
        (i as f64 - self.n_left as f64 + 0.5) * self.dx
    }

    pub fn is_left_cell(&self, i: usize) -> bool {
        i < self.n_left
    }

    /// Index of the node sitting on the junction.
    pub fn junction_node(&self) -> usize {
        self.n_left
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n_left == other.n_left
            && self.n_right == other.n_right
            && (self.dx - other.dx).abs() <= 1e-12 * self.dx
    }

    fn require_same(&self, other: &Grid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}+{} cells of {} vs {}+{} cells of {}",
                self.n_left, self.n_right, self.dx, other.n_left, other.n_right, other.dx
            )))
        }
    }
}

/// Which side of the junction a cell or node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Junction,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Junction => "junction",
            Side::Right => "right",
        }
    }
}

/// Piecewise-constant density on a [`Grid`]: the conservation-law state.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl CellField {
    /// Validates per-side density ranges (clamping round-off).
    pub fn new(grid: Grid, mut values: Vec<f64>, time: f64, j: &JunctionModel) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        for (i, v) in values.iter_mut().enumerate() {
            let flux = if grid.is_left_cell(i) { &j.left } else { &j.right };
            *v = flux.check_density(*v)?;
        }
        Ok(Self { grid, values, time })
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(grid: Grid, j: &JunctionModel, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.n_cells()).map(|i| f(grid.cell_center(i))).collect();
        Self::new(grid, values, 0.0, j)
    }

    pub fn riemann(grid: Grid, j: &JunctionModel, rho_left: f64, rho_right: f64) -> Result<Self> {
        let values = (0..grid.n_cells())
            .map(|i| if grid.is_left_cell(i) { rho_left } else { rho_right })
            .collect();
        Self::new(grid, values, 0.0, j)
    }

    /// A density canonical datum, or the slopes of a value-function one.
    pub fn canonical(grid: Grid, j: &JunctionModel, datum: &CanonicalDatum) -> Result<Self> {
        let (l, r) = datum.sides(j)?;
        Self::riemann(grid, j, l, r)
    }

    /// Cell averages of the derivative of a node field.
    pub fn from_slopes(u: &NodeField, j: &JunctionModel) -> Result<Self> {
        let dx = u.grid.dx;
        let values = u.values.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
        Self::new(u.grid, values, u.time, j)
    }

    pub fn left(&self) -> &[f64] {
        &self.values[..self.grid.n_left]
    }

    pub fn right(&self) -> &[f64] {
        &self.values[self.grid.n_left..]
    }

    pub fn mass(&self) -> f64 {
        self.grid.dx * self.values.iter().sum::<f64>()
    }

    pub fn l1_distance(&self, other: &CellField) -> Result<f64> {
        self.grid.require_same(&other.grid)?;
        Ok(self.grid.dx
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// Densities of the two cells adjacent to the junction.
    pub fn trace_estimate(&self, j: &JunctionModel) -> TracePair {
        let q_minus = self.values[self.grid.n_left - 1];
        let q_plus = self.values[self.grid.n_left];
        TracePair {
            q_minus,
            q_plus,
            flux_value: j.left.h(q_minus),
        }
    }

    pub fn side(&self, i: usize) -> Side {
        if self.grid.is_left_cell(i) {
            Side::Left
        } else {
            Side::Right
        }
    }
}

pub fn mass(state: &CellField) -> f64 {
    state.mass()
}

pub fn l1_distance(s1: &CellField, s2: &CellField) -> Result<f64> {
    s1.l1_distance(s2)
}

pub fn trace_estimate(state: &CellField, j: &JunctionModel) -> TracePair {
    state.trace_estimate(j)
}

/// Slack on discrete slopes before a node field leaves the Lipschitz class.
pub const SLOPE_TOL: f64 = DENSITY_TOL;

/// Values at the grid nodes, node `n_left` sitting on the junction: the HJ state.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl NodeField {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n_nodes()).map(|k| f(grid.node_x(k))).collect();
        Self {
            grid,
            values,
            time: 0.0,
        }
    }

    pub fn canonical(grid: Grid, j: &JunctionModel, datum: &CanonicalDatum) -> Result<Self> {
        let (l, r) = datum.sides(j)?;
        Ok(Self::from_fn(grid, |x| if x <= 0.0 { l * x } else { r * x }))
    }

    /// Cumulative integral of a density, normalized to `u(0) = offset_at_junction`.
    pub fn integrate(rho: &CellField, offset_at_junction: f64) -> Self {
        let grid = rho.grid;
        let mut values = Vec::with_capacity(grid.n_nodes());
        let mut acc = 0.0;
        values.push(0.0);
        for v in &rho.values {
            acc += grid.dx * v;
            values.push(acc);
        }
        let shift = offset_at_junction - values[grid.junction_node()];
        for v in &mut values {
            *v += shift;
        }
        Self {
            grid,
            values,
            time: rho.time,
        }
    }

    pub fn at_junction(&self) -> f64 {
        self.values[self.grid.junction_node()]
    }

    pub fn side(&self, k: usize) -> Side {
        let jn = self.grid.junction_node();
        match k.cmp(&jn) {
            std::cmp::Ordering::Less => Side::Left,
            std::cmp::Ordering::Equal => Side::Junction,
            std::cmp::Ordering::Greater => Side::Right,
        }
    }

    /// Checks that every one-sided slope lies in `[-tol, R + tol]` for its side.
    pub fn validate_lip(&self, j: &JunctionModel) -> Result<()> {
        let dx = self.grid.dx;
        for (i, w) in self.values.windows(2).enumerate() {
            let slope = (w[1] - w[0]) / dx;
            let max = if self.grid.is_left_cell(i) {
                j.left.rmax()
            } else {
                j.right.rmax()
            };
            if !slope.is_finite() || slope < -SLOPE_TOL || slope > max + SLOPE_TOL {
                return Err(Error::SlopeOutOfClass {
                    x: self.grid.cell_center(i),
                    slope,
                    max,
                });
            }
        }
        Ok(())
    }

    pub fn sup_distance(&self, other: &NodeField) -> Result<f64> {
        self.grid.require_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}
