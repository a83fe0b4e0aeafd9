//! First-order Godunov scheme for the flux-limited conservation law.
//!
//! Interior interfaces use the demand/supply flux `min{D(a), S(b)}` of their side.
//! The interface at `x = 0` uses `min{A, D^l(a), S^r(b)}`. Outer boundaries copy
//! the boundary cell into a ghost cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{ConcaveFlux, DENSITY_TOL};
use crate::grid::CellField;
use crate::junction::{JunctionModel, TracePair};

/// CFL number used when none is given.
pub const DEFAULT_CFL: f64 = 0.8;

/// Godunov flux between states `a` (left) and `b` (right) of a single concave flux.
pub fn godunov_interior_flux(flux: &ConcaveFlux, a: f64, b: f64) -> Result<f64> {
    let a = flux.check_density(a)?;
    let b = flux.check_density(b)?;
    Ok(godunov(flux, a, b))
}

#[inline]
fn godunov(flux: &ConcaveFlux, a: f64, b: f64) -> f64 {
    flux.demand_unchecked(a).min(flux.supply_unchecked(b))
}

/// Largest stable time step `cfl dx / L`.
pub fn max_dt(j: &JunctionModel, dx: f64, cfl: f64) -> f64 {
    cfl * dx / j.lipschitz()
}

/// Outer-boundary fluxes of one step, counted positive to the right.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryFlux {
    pub left: f64,
    pub right: f64,
}

/// How the interface at `x = 0` is treated.
#[derive(Clone, Copy)]
enum Coupling<'a> {
    Junction(&'a JunctionModel),
    /// One flux on the whole line, no junction.
    Single(&'a ConcaveFlux),
}

fn advance(
    values: &mut [f64],
    fluxes: &mut Vec<f64>,
    n_left: usize,
    ratio: f64,
    coupling: Coupling<'_>,
) -> Result<BoundaryFlux> {
    let n = values.len();
    let (left, right) = match coupling {
        Coupling::Junction(j) => (&j.left, &j.right),
        Coupling::Single(f) => (f, f),
    };
    fluxes.clear();
    fluxes.reserve(n + 1);
    // interface k sits between cells k - 1 and k
    fluxes.push(left.h(values[0]));
    for k in 1..n {
        let (a, b) = (values[k - 1], values[k]);
        let f = if k < n_left {
            godunov(left, a, b)
        } else if k > n_left {
            godunov(right, a, b)
        } else {
            match coupling {
                Coupling::Junction(j) => j.flux_unchecked(a, b),
                Coupling::Single(f) => godunov(f, a, b),
            }
        };
        fluxes.push(f);
    }
    fluxes.push(right.h(values[n - 1]));
    for (i, v) in values.iter_mut().enumerate() {
        let updated = *v - ratio * (fluxes[i + 1] - fluxes[i]);
        let rmax = if i < n_left { left.rmax() } else { right.rmax() };
        if !(updated >= -DENSITY_TOL && updated <= rmax + DENSITY_TOL) {
            return Err(Error::InvariantDomain {
                cell: i,
                value: updated,
            });
        }
        *v = updated.clamp(0.0, rmax);
    }
    Ok(BoundaryFlux {
        left: fluxes[0],
        right: fluxes[n],
    })
}

fn check_dt(j: &JunctionModel, dx: f64, dt: f64) -> Result<()> {
    let max = max_dt(j, dx, 1.0);
    if !(dt.is_finite() && dt >= 0.0) || dt > max * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, max });
    }
    Ok(())
}

/// One explicit conservative step.
pub fn step(state: &CellField, j: &JunctionModel, dt: f64) -> Result<CellField> {
    let mut next = state.clone();
    step_in_place(&mut next, j, dt, &mut Vec::new())?;
    Ok(next)
}

/// In-place form of [`step`]; `scratch` holds the interface fluxes between calls.
pub fn step_in_place(
    state: &mut CellField,
    j: &JunctionModel,
    dt: f64,
    scratch: &mut Vec<f64>,
) -> Result<BoundaryFlux> {
    check_dt(j, state.grid.dx(), dt)?;
    let n_left = state.grid.n_left();
    let ratio = dt / state.grid.dx();
    let bf = advance(&mut state.values, scratch, n_left, ratio, Coupling::Junction(j))?;
    state.time += dt;
    Ok(bf)
}

/// One step of the whole-line scheme for a single flux, ignoring the junction.
pub fn step_single_flux(
    state: &mut CellField,
    flux: &ConcaveFlux,
    dt: f64,
    scratch: &mut Vec<f64>,
) -> Result<BoundaryFlux> {
    let max = state.grid.dx() / flux.lipschitz();
    if !(dt.is_finite() && dt >= 0.0) || dt > max * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, max });
    }
    let n_left = state.grid.n_left();
    let ratio = dt / state.grid.dx();
    let bf = advance(&mut state.values, scratch, n_left, ratio, Coupling::Single(flux))?;
    state.time += dt;
    Ok(bf)
}

/// Time steps of a run: full steps of `dt_max`, shortened to land exactly on each
/// requested output time.
#[derive(Debug, Clone)]
pub struct Schedule {
    targets: Vec<f64>,
    next: usize,
    time: f64,
    dt_max: f64,
}

/// One entry of a [`Schedule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledStep {
    pub dt: f64,
    /// The time reached after this step.
    pub time: f64,
    /// Set when `time` is one of the output times.
    pub output: bool,
}

impl Schedule {
    /// `outputs` must lie in `[0, t_end]`; `t_end` is always an output time.
    pub fn new(t_end: f64, dt_max: f64, outputs: &[f64]) -> Result<Self> {
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(Error::Time(t_end));
        }
        if !(dt_max.is_finite() && dt_max > 0.0) {
            return Err(Error::Precondition(format!("dt_max must be positive, got {dt_max}")));
        }
        let mut targets: Vec<f64> = outputs.to_vec();
        if let Some(&bad) = targets.iter().find(|&&t| !(t >= 0.0 && t <= t_end)) {
            return Err(Error::Precondition(format!(
                "snapshot time {bad} outside [0, {t_end}]"
            )));
        }
        targets.push(t_end);
        targets.sort_by(f64::total_cmp);
        targets.dedup();
        Ok(Self {
            targets,
            next: 0,
            time: 0.0,
            dt_max,
        })
    }

    /// Output times, including `t_end`.
    pub fn outputs(&self) -> &[f64] {
        &self.targets
    }

    /// Number of steps the schedule will produce.
    pub fn len(&self) -> usize {
        self.clone().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Iterator for Schedule {
    type Item = ScheduledStep;

    fn next(&mut self) -> Option<ScheduledStep> {
        // outputs at the current time need no step
        while self.next < self.targets.len() && self.targets[self.next] <= self.time {
            self.next += 1;
        }
        let target = *self.targets.get(self.next)?;
        let remaining = target - self.time;
        let slack = 1e-12 * target.abs().max(1.0);
        let (dt, time, output) = if remaining <= self.dt_max + slack {
            self.next += 1;
            (remaining, target, true)
        } else {
            (self.dt_max, self.time + self.dt_max, false)
        };
        self.time = time;
        Some(ScheduledStep { dt, time, output })
    }
}

/// Per-step bookkeeping of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub time: f64,
    pub dt: f64,
    pub mass: f64,
    pub trace: TracePair,
}

/// Snapshots of a conservation-law run plus the time-integrated outer boundary fluxes.
#[derive(Debug, Clone)]
pub struct ClRun {
    pub snapshots: Vec<CellField>,
    /// `int_0^t F(x_min) ds` at each snapshot time.
    pub left_boundary_integral: Vec<f64>,
    /// `int_0^t F(x_max) ds` at each snapshot time.
    pub right_boundary_integral: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

impl ClRun {
    pub fn last(&self) -> &CellField {
        self.snapshots.last().expect("a run has at least one snapshot")
    }
}

/// Runs the scheme to `t_end` with `dt = min(cfl dx / L, time to the next snapshot)`.
pub fn solve(
    rho0: &CellField,
    j: &JunctionModel,
    t_end: f64,
    cfl: f64,
    snapshot_times: &[f64],
) -> Result<ClRun> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::Precondition(format!("cfl must be in (0, 1], got {cfl}")));
    }
    let schedule = Schedule::new(t_end, max_dt(j, rho0.grid.dx(), cfl), snapshot_times)?;
    let mut run = ClRun {
        snapshots: Vec::new(),
        left_boundary_integral: Vec::new(),
        right_boundary_integral: Vec::new(),
        steps: Vec::new(),
    };
    let mut state = rho0.clone();
    state.time = 0.0;
    let (mut int_left, mut int_right) = (0.0, 0.0);
    if schedule.outputs()[0] == 0.0 {
        run.snapshots.push(state.clone());
        run.left_boundary_integral.push(0.0);
        run.right_boundary_integral.push(0.0);
    }
    let mut scratch = Vec::new();
    for s in schedule {
        let bf = step_in_place(&mut state, j, s.dt, &mut scratch)?;
        state.time = s.time;
        int_left += s.dt * bf.left;
        int_right += s.dt * bf.right;
        run.steps.push(StepRecord {
            time: s.time,
            dt: s.dt,
            mass: state.mass(),
            trace: state.trace_estimate(j),
        });
        if s.output {
            run.snapshots.push(state.clone());
            run.left_boundary_integral.push(int_left);
            run.right_boundary_integral.push(int_right);
        }
    }
    Ok(run)
}

/// Whole-line single-flux run to `t_end`, with the same time steps as [`solve`] for the
/// junction model `j`.
pub fn solve_single_flux(
    rho0: &CellField,
    flux: &ConcaveFlux,
    j: &JunctionModel,
    t_end: f64,
    cfl: f64,
) -> Result<CellField> {
    let schedule = Schedule::new(t_end, max_dt(j, rho0.grid.dx(), cfl), &[])?;
    let mut state = rho0.clone();
    let mut scratch = Vec::new();
    for v in state.values.iter_mut() {
        *v = v.clamp(0.0, flux.rmax());
    }
    for s in schedule {
        step_single_flux(&mut state, flux, s.dt, &mut scratch)?;
        state.time = s.time;
    }
    Ok(state)
}

/// L1 distance between a state and the exact junction Riemann solution at the state's
/// time, integrating the exact profile with `sub` midpoint samples per cell.
pub fn riemann_l1_error(
    state: &CellField,
    j: &JunctionModel,
    rho_left: f64,
    rho_right: f64,
    sub: usize,
) -> Result<f64> {
    if state.time <= 0.0 {
        return Err(Error::Time(state.time));
    }
    let dx = state.grid.dx();
    let mut err = 0.0;
    for (i, v) in state.values.iter().enumerate() {
        let x0 = state.grid.node_x(i);
        let mut cell = 0.0;
        for s in 0..sub {
            let x = x0 + (s as f64 + 0.5) * dx / sub as f64;
            let exact = j.riemann_profile(rho_left, rho_right, x / state.time)?;
            cell += (v - exact).abs();
        }
        err += cell * dx / sub as f64;
    }
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::{CanonicalDatum, DatumShape};
    use crate::grid::Grid;

    fn model(a: f64) -> JunctionModel {
        let h = ConcaveFlux::greenshields();
        JunctionModel::new(h.clone(), h, a).unwrap()
    }

    #[test]
    fn interior_flux_examples() {
        let h = ConcaveFlux::greenshields();
        assert!((godunov_interior_flux(&h, 0.3, 0.7).unwrap() - 0.21).abs() < 1e-15);
        assert_eq!(godunov_interior_flux(&h, 0.4, 0.4).unwrap(), h.eval(0.4).unwrap());
        assert_eq!(godunov_interior_flux(&h, 0.7, 0.3).unwrap(), 0.25);
        assert!(godunov_interior_flux(&h, 0.7, 1.3).is_err());
    }

    #[test]
    fn germ_uniform_state_is_steady() {
        let j = model(0.1875);
        let g = Grid::symmetric(1.0, 0.01).unwrap();
        let s = CellField::riemann(g, &j, 0.1, 0.1).unwrap();
        let next = step(&s, &j, 0.8 * 0.01).unwrap();
        assert_eq!(next.values, s.values);
    }

    #[test]
    fn psi_hat_at_limiter_is_steady() {
        let j = model(0.1875);
        let g = Grid::symmetric(1.0, 0.01).unwrap();
        let datum = CanonicalDatum::new(DatumShape::PsiHat, 0.1875);
        let s = CellField::canonical(g, &j, &datum).unwrap();
        let mut cur = s.clone();
        for _ in 0..50 {
            cur = step(&cur, &j, 0.008).unwrap();
        }
        for (a, b) in cur.values.iter().zip(&s.values) {
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn riemann_cells_move_toward_traces() {
        let j = model(0.1875);
        let g = Grid::symmetric(1.0, 0.01).unwrap();
        let s = CellField::riemann(g, &j, 0.5, 0.5).unwrap();
        let next = step(&s, &j, 0.4 * 0.01).unwrap();
        let n = g.n_left();
        assert!(next.values[n - 1] > 0.5);
        assert!(next.values[n] < 0.5);
        assert_eq!(next.values[n - 2], 0.5);
        assert_eq!(next.values[n + 1], 0.5);
    }

    #[test]
    fn cfl_violation_rejected() {
        let j = model(0.25);
        let g = Grid::symmetric(1.0, 0.01).unwrap();
        let s = CellField::riemann(g, &j, 0.5, 0.5).unwrap();
        assert!(matches!(step(&s, &j, 0.011), Err(Error::Cfl { .. })));
    }

    #[test]
    fn t_end_zero_returns_datum() {
        let j = model(0.25);
        let g = Grid::symmetric(1.0, 0.01).unwrap();
        let s = CellField::riemann(g, &j, 0.3, 0.6).unwrap();
        let run = solve(&s, &j, 0.0, 0.8, &[]).unwrap();
        assert_eq!(run.snapshots.len(), 1);
        assert_eq!(run.snapshots[0], s);
        assert!(run.steps.is_empty());
    }

    #[test]
    fn snapshots_hit_requested_times() {
        let j = model(0.25);
        let g = Grid::symmetric(1.0, 0.01).unwrap();
        let s = CellField::riemann(g, &j, 0.3, 0.6).unwrap();
        let run = solve(&s, &j, 0.5, 0.8, &[0.0, 0.1, 0.333]).unwrap();
        let times: Vec<f64> = run.snapshots.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![0.0, 0.1, 0.333, 0.5]);
        assert!(run.steps.iter().all(|r| r.dt <= 0.008 * (1.0 + 1e-12)));
    }

    #[test]
    fn schedule_counts_steps() {
        let sch = Schedule::new(1.0, 0.25, &[]).unwrap();
        let steps: Vec<_> = sch.collect();
        assert_eq!(steps.len(), 4);
        assert_eq!(steps[3].time, 1.0);
        assert!(steps[3].output);
        assert!(Schedule::new(1.0, 0.1, &[2.0]).is_err());
    }

    #[test]
    fn mass_telescopes_with_zero_outer_flux() {
        let j = model(0.1875);
        let g = Grid::symmetric(11.0, 0.01).unwrap();
        let s = CellField::from_fn(g, &j, |x| if x.abs() < 0.5 { 0.6 + 0.3 * x } else { 0.0 })
            .unwrap();
        let mut cur = s.clone();
        let mut scratch = Vec::new();
        for _ in 0..1000 {
            let bf = step_in_place(&mut cur, &j, 0.008, &mut scratch).unwrap();
            assert_eq!((bf.left, bf.right), (0.0, 0.0));
        }
        assert!((cur.mass() - s.mass()).abs() <= 1e-10);
    }

    #[test]
    fn riemann_run_matches_oracle() {
        let j = model(0.1875);
        let g = Grid::symmetric(1.0, 1.0 / 200.0).unwrap();
        let s = CellField::riemann(g, &j, 0.5, 0.5).unwrap();
        let run = solve(&s, &j, 0.5, 0.8, &[]).unwrap();
        let err = riemann_l1_error(run.last(), &j, 0.5, 0.5, 8).unwrap();
        assert!(err <= 0.01, "L1 error {err}");
    }
}
