use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cl::{self, Schedule};
use crate::error::{Error, Result};
use crate::flux::{CanonicalDatum, DatumShape};
use crate::grid::{CellField, Grid, NodeField};
use crate::hj;
use crate::junction::JunctionModel;

use super::handle::{Equation, HandleKind, SemigroupHandle};
use super::report::CheckRecord;

const ROUNDOFF_PER_STEP: f64 = 1e-12;
const MASS_TOL: f64 = 1e-10;
const CONSTANTS_TOL: f64 = 1e-10;
const SCALE_TOL: f64 = 0.02;
const RIEMANN_TOL: f64 = 0.01;
const PROFILE_TOL: f64 = 0.02;
const EXACT_TOL: f64 = 1e-12;
const CHECK_LEVEL_TOL: f64 = 0.01;

pub(crate) fn trial_rng(seed: u64, stream: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream << 32 | trial as u64);
    rng
}

/// Random piecewise-constant density: `pieces` levels on `[lo, hi)`, `base` elsewhere.
/// Levels are drawn as fractions of `cap` times the side's maximal density.
fn random_density(
    rng: &mut ChaCha8Rng,
    grid: Grid,
    lo: f64,
    hi: f64,
    pieces: usize,
    cap: (f64, f64),
    base: Option<&[f64]>,
) -> Vec<f64> {
    let mut cuts: Vec<f64> = (1..pieces).map(|_| rng.gen_range(lo..hi)).collect();
    cuts.sort_by(f64::total_cmp);
    let levels: Vec<f64> = (0..pieces).map(|_| rng.gen::<f64>()).collect();
    (0..grid.n_cells())
        .map(|i| {
            let x = grid.cell_center(i);
            if x >= lo && x < hi {
                let r = if grid.is_left_cell(i) { cap.0 } else { cap.1 };
                levels[cuts.partition_point(|c| *c <= x)] * r
            } else {
                base.map_or(0.0, |b| b[i])
            }
        })
        .collect()
}

fn full_caps(j: &JunctionModel) -> (f64, f64) {
    (j.left.rmax(), j.right.rmax())
}

/// Pair of random densities that agree outside `[-0.75, 0.75)`.
fn random_pair(h: &SemigroupHandle, grid: Grid, stream: u64, seed: u64, trial: usize) -> Result<(CellField, CellField)> {
    let j = &h.model;
    let mut rng = trial_rng(seed, stream, trial);
    let caps = full_caps(j);
    let base = random_density(&mut rng, grid, grid.x_min(), grid.x_max(), 6, caps, None);
    let a = random_density(&mut rng, grid, -0.75, 0.75, 5, caps, Some(&base));
    let b = random_density(&mut rng, grid, -0.75, 0.75, 5, caps, Some(&base));
    Ok((CellField::new(grid, a, 0.0, j)?, CellField::new(grid, b, 0.0, j)?))
}

fn cl_lockstep(
    h: &SemigroupHandle,
    a: &CellField,
    b: &CellField,
    t_end: f64,
    mut on_step: impl FnMut(&CellField, &CellField) -> Result<()>,
) -> Result<usize> {
    let schedule = Schedule::new(t_end, h.dt_max(), &[])?;
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut scratch = Vec::new();
    let mut steps = 0;
    for s in schedule {
        cl::step_in_place(&mut a, &h.model, s.dt, &mut scratch)?;
        cl::step_in_place(&mut b, &h.model, s.dt, &mut scratch)?;
        on_step(&a, &b)?;
        steps += 1;
    }
    Ok(steps)
}

fn hj_lockstep(
    h: &SemigroupHandle,
    a: &NodeField,
    b: &NodeField,
    t_end: f64,
    mut on_step: impl FnMut(&NodeField, &NodeField) -> Result<()>,
) -> Result<usize> {
    let schedule = Schedule::new(t_end, h.dt_max(), &[])?;
    let (mut a, mut b) = (a.clone(), b.clone());
    let mut slopes = Vec::new();
    let mut steps = 0;
    for s in schedule {
        hj::hj_step(&mut a, &h.model, s.dt, &mut slopes)?;
        hj::hj_step(&mut b, &h.model, s.dt, &mut slopes)?;
        on_step(&a, &b)?;
        steps += 1;
    }
    Ok(steps)
}

fn t_max(t_grid: &[f64]) -> f64 {
    t_grid.iter().copied().fold(0.0, f64::max)
}

fn max_par(values: Vec<f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

/// L1 contraction over `n_trials` random pairs. Internal handles are stepped in lockstep
/// and the per-step increase is measured; external handles are sampled on `t_grid`.
pub fn check_l1_contraction(h: &SemigroupHandle, n_trials: usize, t_grid: &[f64], seed: u64) -> Result<CheckRecord> {
    let grid = h.grid()?;
    let tm = t_max(t_grid);
    let internal = h.is_internal();
    let margins = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let (a, b) = random_pair(h, grid, 1, seed, trial)?;
            let d0 = a.l1_distance(&b)?;
            if internal {
                let mut prev = d0;
                let mut worst = 0.0f64;
                cl_lockstep(h, &a, &b, tm, |a, b| {
                    let d = a.l1_distance(b)?;
                    worst = worst.max(d - prev);
                    prev = d;
                    Ok(())
                })?;
                Ok(worst)
            } else {
                let mut worst = 0.0f64;
                for &t in t_grid {
                    let d = h.evolve_cl(&a, t)?.l1_distance(&h.evolve_cl(&b, t)?)?;
                    worst = worst.max(d - d0);
                }
                Ok(worst)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let tol = if internal {
        ROUNDOFF_PER_STEP
    } else {
        ROUNDOFF_PER_STEP * (1 + h.steps(tm)) as f64
    };
    Ok(CheckRecord::evaluate(
        "cl.l1_contraction",
        max_par(margins),
        tol,
        format!(
            "{n_trials} random piecewise-constant pairs, t in {t_grid:?}, {}",
            if internal { "per-step increase" } else { "increase over t" }
        ),
    ))
}

/// Order preservation for `a <= max(a, b)`.
pub fn check_comparison(h: &SemigroupHandle, n_trials: usize, t_grid: &[f64], seed: u64) -> Result<CheckRecord> {
    let grid = h.grid()?;
    let margins = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let (a, b) = random_pair(h, grid, 2, seed, trial)?;
            let upper: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x.max(*y)).collect();
            let upper = CellField::new(grid, upper, 0.0, &h.model)?;
            let violation = |lo: &CellField, hi: &CellField| {
                lo.values
                    .iter()
                    .zip(&hi.values)
                    .map(|(l, u)| l - u)
                    .fold(0.0, f64::max)
            };
            let mut worst = 0.0f64;
            if h.is_internal() {
                cl_lockstep(h, &a, &upper, t_max(t_grid), |lo, hi| {
                    worst = worst.max(violation(lo, hi));
                    Ok(())
                })?;
            } else {
                for &t in t_grid {
                    worst = worst.max(violation(&h.evolve_cl(&a, t)?, &h.evolve_cl(&upper, t)?));
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckRecord::evaluate(
        "cl.comparison",
        max_par(margins),
        ROUNDOFF_PER_STEP,
        format!("{n_trials} ordered pairs, t in {t_grid:?}, largest cellwise order violation"),
    ))
}

/// Mass drift over 1000 steps for data supported in `[-0.5, 0.5]` on a domain wide
/// enough that the outer boundary cells stay empty.
pub fn check_mass(h: &SemigroupHandle, seed: u64) -> Result<CheckRecord> {
    const STEPS: usize = 1000;
    let half_width = 1.0 + (STEPS + 2) as f64 * h.dx;
    let grid = h.grid_with_half_width(half_width)?;
    let mut rng = trial_rng(seed, 3, 0);
    let rho0 = random_density(&mut rng, grid, -0.5, 0.5, 6, full_caps(&h.model), None);
    let rho0 = CellField::new(grid, rho0, 0.0, &h.model)?;
    let t = STEPS as f64 * h.dt_max();
    let rho = h.evolve_cl(&rho0, t)?;
    let drift = (rho.mass() - rho0.mass()).abs();
    Ok(CheckRecord::evaluate(
        "cl.mass",
        drift,
        MASS_TOL,
        format!("compact data in [-0.5, 0.5], {} steps on [-{half_width:.3}, {half_width:.3}]", h.steps(t)),
    ))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Data equal on `[a, b]` must give bitwise equal results inside the numerical cone
/// `[a + n dx, b - n dx]` after `n` steps.
pub fn check_finite_speed(h: &SemigroupHandle, a: f64, b: f64, t: f64, seed: u64) -> Result<CheckRecord> {
    let grid = h.grid()?;
    let j = &h.model;
    let n = h.steps(t);
    let shrink = n as f64 * h.dx;
    let (lo, hi) = (a + shrink, b - shrink);
    let mut rng = trial_rng(seed, 4, 0);
    let caps = full_caps(j);
    let r1 = random_density(&mut rng, grid, grid.x_min(), grid.x_max(), 8, caps, None);
    let outside = random_density(&mut rng, grid, grid.x_min(), grid.x_max(), 8, caps, None);
    let r2: Vec<f64> = (0..grid.n_cells())
        .map(|i| {
            let (l, r) = (grid.node_x(i), grid.node_x(i + 1));
            if l >= a && r <= b { r1[i] } else { outside[i] }
        })
        .collect();
    let r1 = CellField::new(grid, r1, 0.0, j)?;
    let r2 = CellField::new(grid, r2, 0.0, j)?;
    let (name, margin, count) = match h.equation() {
        Equation::Cl => {
            let (s1, s2) = (h.evolve_cl(&r1, t)?, h.evolve_cl(&r2, t)?);
            let idx: Vec<usize> = (0..grid.n_cells())
                .filter(|&i| grid.node_x(i) >= lo && grid.node_x(i + 1) <= hi)
                .collect();
            let d = idx.iter().map(|&i| (s1.values[i] - s2.values[i]).abs()).fold(0.0, f64::max);
            ("cl.finite_speed", d, idx.len())
        }
        Equation::Hj => {
            let u1 = NodeField::integrate(&r1, 0.0);
            let u2 = splice(&u1, &r2, a, b);
            let (s1, s2) = (h.evolve_hj(&u1, t)?, h.evolve_hj(&u2, t)?);
            let idx: Vec<usize> = (0..grid.n_nodes())
                .filter(|&k| grid.node_x(k) >= lo && grid.node_x(k) <= hi)
                .collect();
            let d = idx.iter().map(|&k| (s1.values[k] - s2.values[k]).abs()).fold(0.0, f64::max);
            ("hj.finite_speed", d, idx.len())
        }
    };
    if count == 0 {
        return Ok(CheckRecord::failed(name, 0.0, "numerical cone is empty"));
    }
    Ok(CheckRecord::evaluate(
        name,
        margin,
        0.0,
        format!("data equal on [{a}, {b}], t = {t}, bitwise on [{lo:.4}, {hi:.4}] ({count} points)"),
    ))
}

/// Agreement with the whole-line single-flux semi-groups away from the junction, bitwise
/// outside the numerical cone `|x| <= n dx`.
pub fn check_locality(h: &SemigroupHandle, t: f64, seed: u64) -> Result<CheckRecord> {
    let grid = h.grid()?;
    let j = &h.model;
    let n = h.steps(t);
    let nl = grid.n_left();
    let cap = j.left.rmax().min(j.right.rmax());
    let mut rng = trial_rng(seed, 5, 0);
    let rho0 = random_density(&mut rng, grid, grid.x_min(), grid.x_max(), 10, (cap, cap), None);
    let rho0 = CellField::new(grid, rho0, 0.0, j)?;
    if nl <= n || grid.n_right() <= n {
        return Ok(CheckRecord::failed(
            format!("{}.locality", prefix(h)),
            0.0,
            "numerical cone covers the domain",
        ));
    }
    let (name, margin) = match h.equation() {
        Equation::Cl => {
            let s = h.evolve_cl(&rho0, t)?;
            let l = cl::solve_single_flux(&rho0, &j.left, j, t, h.cfl)?;
            let r = cl::solve_single_flux(&rho0, &j.right, j, t, h.cfl)?;
            let dl = max_abs_diff(&s.values[..nl - n], &l.values[..nl - n]);
            let dr = max_abs_diff(&s.values[nl + n..], &r.values[nl + n..]);
            ("cl.locality", dl.max(dr))
        }
        Equation::Hj => {
            let u0 = NodeField::integrate(&rho0, 0.0);
            let s = h.evolve_hj(&u0, t)?;
            let l = hj_single_flux(h, &u0, &JunctionModel::symmetric(j.left.clone()), t)?;
            let r = hj_single_flux(h, &u0, &JunctionModel::symmetric(j.right.clone()), t)?;
            let dl = max_abs_diff(&s.values[..nl - n], &l.values[..nl - n]);
            let dr = max_abs_diff(&s.values[nl + n + 1..], &r.values[nl + n + 1..]);
            ("hj.locality", dl.max(dr))
        }
    };
    Ok(CheckRecord::evaluate(
        name,
        margin,
        0.0,
        format!("t = {t}, bitwise against single-flux runs for |x| > {:.4}", n as f64 * h.dx),
    ))
}

/// `u1` on the nodes of `[a, b]`, continued outward with the slopes of `rho`.
fn splice(u1: &NodeField, rho: &CellField, a: f64, b: f64) -> NodeField {
    let grid = u1.grid;
    let dx = grid.dx();
    let inside: Vec<usize> = (0..grid.n_nodes())
        .filter(|&k| grid.node_x(k) >= a && grid.node_x(k) <= b)
        .collect();
    let (first, last) = (inside[0], inside[inside.len() - 1]);
    let mut values = u1.values.clone();
    for k in last + 1..grid.n_nodes() {
        values[k] = values[k - 1] + dx * rho.values[k - 1];
    }
    for k in (0..first).rev() {
        values[k] = values[k + 1] - dx * rho.values[k];
    }
    NodeField {
        grid,
        values,
        time: u1.time,
    }
}

fn prefix(h: &SemigroupHandle) -> &'static str {
    match h.equation() {
        Equation::Cl => "cl",
        Equation::Hj => "hj",
    }
}

/// Node scheme of a single flux on the whole line with the time steps of `h`.
fn hj_single_flux(h: &SemigroupHandle, u0: &NodeField, single: &JunctionModel, t: f64) -> Result<NodeField> {
    let mut u = u0.clone();
    let mut slopes = Vec::new();
    for s in Schedule::new(t, h.dt_max(), &[])? {
        hj::hj_step(&mut u, single, s.dt, &mut slopes)?;
    }
    Ok(u)
}

/// Self-similarity: the profile at `t = 1` against the run at `t = 1/eps` on a grid
/// refined by `eps`, compared cell by cell in rescaled coordinates.
pub fn check_scale_invariance(h: &SemigroupHandle, eps_list: &[f64]) -> Result<CheckRecord> {
    let j = &h.model;
    let grid = h.grid()?;
    let (nl, nr) = (grid.n_left(), grid.n_right());
    let mut worst = 0.0f64;
    match h.equation() {
        Equation::Cl => {
            let data = [
                (0.5 * j.left.rmax(), 0.5 * j.right.rmax()),
                (0.8 * j.left.rmax(), 0.3 * j.right.rmax()),
            ];
            for (rl, rr) in data {
                let coarse = h.evolve_cl(&CellField::riemann(grid, j, rl, rr)?, 1.0)?;
                for &eps in eps_list {
                    let fh = h.with_resolution(h.dx / eps);
                    let fg = fh.grid()?;
                    let fine = fh.evolve_cl(&CellField::riemann(fg, j, rl, rr)?, 1.0 / eps)?;
                    let off = fg.n_left() - nl;
                    let gap: f64 = (0..nl + nr)
                        .map(|i| (coarse.values[i] - fine.values[off + i]).abs())
                        .sum::<f64>()
                        * h.dx;
                    worst = worst.max(gap);
                }
            }
        }
        Equation::Hj => {
            let phi = CanonicalDatum::new(DatumShape::PhiHat, 0.0);
            let coarse = h.evolve_hj(&NodeField::canonical(grid, j, &phi)?, 1.0)?;
            for &eps in eps_list {
                let fh = h.with_resolution(h.dx / eps);
                let fg = fh.grid()?;
                let fine = fh.evolve_hj(&NodeField::canonical(fg, j, &phi)?, 1.0 / eps)?;
                let off = fg.n_left() - nl;
                let gap = (0..grid.n_nodes())
                    .map(|k| (coarse.values[k] - eps * fine.values[off + k]).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(gap);
            }
        }
    }
    let (name, what) = match h.equation() {
        Equation::Cl => ("cl.scale_invariance", "L1 gap of two Riemann profiles"),
        Equation::Hj => ("hj.scale_invariance", "sup gap from phi_hat_0"),
    };
    Ok(CheckRecord::evaluate(
        name,
        worst,
        SCALE_TOL,
        format!("{what}, eps in {eps_list:?}, dx = {}", h.dx),
    ))
}

/// L1 distance to the exact junction Riemann solution of the identified limiter.
pub fn check_riemann_oracle(h: &SemigroupHandle, limiter: f64) -> Result<CheckRecord> {
    let model = h.model.with_limiter(limiter.clamp(0.0, h.model.a_max()))?;
    let grid = h.grid()?;
    let t = 0.5;
    let data = [
        (0.5 * model.left.rmax(), 0.5 * model.right.rmax()),
        (0.2 * model.left.rmax(), 0.3 * model.right.rmax()),
    ];
    let mut worst = 0.0f64;
    for (rl, rr) in data {
        let mut s = h.evolve_cl(&CellField::riemann(grid, &h.model, rl, rr)?, t)?;
        s.time = t;
        worst = worst.max(cl::riemann_l1_error(&s, &model, rl, rr, 8)?);
    }
    Ok(CheckRecord::evaluate(
        "cl.riemann_oracle",
        worst,
        RIEMANN_TOL,
        format!("two Riemann data, t = {t}, exact solution with limiter {:.6}", model.limiter),
    ))
}

fn random_nodes(h: &SemigroupHandle, grid: Grid, stream: u64, seed: u64, trial: usize) -> Result<(NodeField, NodeField)> {
    let (a, b) = random_pair(h, grid, stream, seed, trial)?;
    Ok((NodeField::integrate(&a, 0.0), NodeField::integrate(&b, 0.0)))
}

pub fn check_linf_contraction(h: &SemigroupHandle, n_trials: usize, t_grid: &[f64], seed: u64) -> Result<CheckRecord> {
    let grid = h.grid()?;
    let tm = t_max(t_grid);
    let internal = h.is_internal();
    let margins = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let (a, b) = random_nodes(h, grid, 6, seed, trial)?;
            let d0 = a.sup_distance(&b)?;
            let mut worst = 0.0f64;
            if internal {
                let mut prev = d0;
                hj_lockstep(h, &a, &b, tm, |a, b| {
                    let d = a.sup_distance(b)?;
                    worst = worst.max(d - prev);
                    prev = d;
                    Ok(())
                })?;
            } else {
                for &t in t_grid {
                    let d = h.evolve_hj(&a, t)?.sup_distance(&h.evolve_hj(&b, t)?)?;
                    worst = worst.max(d - d0);
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>>>()?;
    let tol = if internal {
        ROUNDOFF_PER_STEP
    } else {
        ROUNDOFF_PER_STEP * (1 + h.steps(tm)) as f64
    };
    Ok(CheckRecord::evaluate(
        "hj.linf_contraction",
        max_par(margins),
        tol,
        format!("{n_trials} random Lipschitz pairs, t in {t_grid:?}"),
    ))
}

/// `sup |S(t, u + c) - S(t, u) - c|` for random data and constants.
pub fn check_constants(h: &SemigroupHandle, n_trials: usize, t: f64, seed: u64) -> Result<CheckRecord> {
    let grid = h.grid()?;
    let margins = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let (u, _) = random_nodes(h, grid, 7, seed, trial)?;
            let c = trial_rng(seed, 8, trial).gen_range(-5.0..5.0);
            let shifted = NodeField::new(grid, u.values.iter().map(|v| v + c).collect(), 0.0)?;
            let (s, sc) = (h.evolve_hj(&u, t)?, h.evolve_hj(&shifted, t)?);
            Ok(s.values
                .iter()
                .zip(&sc.values)
                .map(|(a, b)| (b - a - c).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckRecord::evaluate(
        "hj.constants",
        max_par(margins),
        CONSTANTS_TOL,
        format!("{n_trials} random data, c in [-5, 5], t = {t}"),
    ))
}

/// `eps f(t / eps, x / eps) = f(t, x)` for the closed-form solutions, at random points.
pub fn check_exact_scale_invariance(model: &JunctionModel, n_trials: usize, seed: u64) -> Result<CheckRecord> {
    let a = model.limiter;
    let mut rng = trial_rng(seed, 9, 0);
    let mut worst = 0.0f64;
    for _ in 0..n_trials {
        let eps: f64 = rng.gen_range(0.1..10.0);
        let t: f64 = rng.gen_range(0.05..2.0);
        let x: f64 = rng.gen_range(-2.0..2.0);
        let level: f64 = rng.gen_range(0.0..=model.a_max());
        let oracles: [&dyn Fn(f64, f64) -> Result<f64>; 4] = [
            &|t, x| hj::exact_bar_s_phi0(model, t, x),
            &|t, x| hj::exact_sa_phi0(model, a, t, x),
            &|t, x| hj::exact_sa_phia(model, level, t, x),
            &|t, x| hj::exact_s_phia_check(model, level, t, x),
        ];
        for f in oracles {
            let v = f(t, x)?;
            let scaled = eps * f(t / eps, x / eps)?;
            worst = worst.max((scaled - v).abs() / (1.0 + v.abs()));
        }
    }
    Ok(CheckRecord::evaluate(
        "hj.exact_scale_invariance",
        worst,
        EXACT_TOL,
        format!("{n_trials} random (eps, t, x) on four closed-form solutions, limiter {a:.6}"),
    ))
}

/// The run from `phi_hat_0` against the closed form of the identified limiter on `[-1, 1]`.
pub fn check_flux_limited_profile(h: &SemigroupHandle, limiter: f64) -> Result<CheckRecord> {
    let a = limiter.clamp(0.0, h.model.a_max());
    let model = h.model.with_limiter(a)?;
    let grid = h.grid()?;
    let u0 = NodeField::canonical(grid, &model, &CanonicalDatum::new(DatumShape::PhiHat, 0.0))?;
    let u = h.evolve_hj(&u0, 1.0)?;
    let mut worst = 0.0f64;
    for k in 0..grid.n_nodes() {
        let x = grid.node_x(k);
        if x.abs() <= 1.0 + 1e-12 {
            worst = worst.max((u.values[k] - hj::exact_sa_phi0(&model, a, 1.0, x)?).abs());
        }
    }
    Ok(CheckRecord::evaluate(
        "hj.flux_limited_profile",
        worst,
        PROFILE_TOL,
        format!("phi_hat_0 at t = 1 against the closed form with limiter {a:.6}, sup on [-1, 1]"),
    ))
}

/// `S(1, phi_check_a)(0) = -a` for `a` up to the identified limiter.
pub fn check_check_profiles(h: &SemigroupHandle, limiter: f64) -> Result<CheckRecord> {
    let a_hat = limiter.clamp(0.0, h.model.a_max());
    let grid = h.grid()?;
    let mut worst = 0.0f64;
    let levels = [0.0, 0.5 * a_hat, a_hat];
    for a in levels {
        let u0 = NodeField::canonical(grid, &h.model, &CanonicalDatum::new(DatumShape::PhiCheck, a))?;
        let u = h.evolve_hj(&u0, 1.0)?;
        worst = worst.max((u.at_junction() + a).abs());
    }
    Ok(CheckRecord::evaluate(
        "hj.check_profiles",
        worst,
        CHECK_LEVEL_TOL,
        format!("phi_check_a at t = 1, x = 0, a in {levels:?}"),
    ))
}

/// `S >= S_bar` on `phi_hat_0` and on `phi_check_a`, up to `2 dx`.
pub fn check_supersolution(h: &SemigroupHandle) -> Result<CheckRecord> {
    let j = &h.model;
    let grid = h.grid()?;
    let t = 1.0;
    let mut worst = 0.0f64;
    let u0 = NodeField::canonical(grid, j, &CanonicalDatum::new(DatumShape::PhiHat, 0.0))?;
    let u = h.evolve_hj(&u0, t)?;
    for k in 0..grid.n_nodes() {
        worst = worst.max(hj::exact_bar_s_phi0(j, t, grid.node_x(k))? - u.values[k]);
    }
    for a in [0.5 * j.a_max(), j.a_max()] {
        let datum = CanonicalDatum::new(DatumShape::PhiCheck, a);
        let u0 = NodeField::canonical(grid, j, &datum)?;
        let u = h.evolve_hj(&u0, t)?;
        for k in 0..grid.n_nodes() {
            worst = worst.max(u0.values[k] - a * t - u.values[k]);
        }
    }
    Ok(CheckRecord::evaluate(
        "hj.supersolution",
        worst,
        2.0 * h.dx,
        "largest excess of the A_max solution over the handle, phi_hat_0 and two check profiles at t = 1",
    ))
}

/// The primitive of the internal conservation-law run against the HJ handle from the
/// same datum.
pub fn check_duality(cl_handle: &SemigroupHandle, hj_handle: &SemigroupHandle) -> Result<CheckRecord> {
    if cl_handle.kind != HandleKind::ClInternal {
        return Ok(CheckRecord::skipped(
            "duality",
            "needs the internal conservation-law solver",
        ));
    }
    let j = &cl_handle.model;
    let grid = cl_handle.grid()?;
    if !grid.same_as(&hj_handle.grid()?) {
        return Err(Error::GridMismatch("handles use different grids".into()));
    }
    let t = 1.0;
    let u0 = NodeField::canonical(grid, j, &CanonicalDatum::new(DatumShape::PhiHat, 0.0))?;
    let rho0 = CellField::from_slopes(&u0, j)?;
    let run = cl::solve(&rho0, j, t, cl_handle.cfl, &[0.0, t])?;
    let from_cl = hj::hj_from_cl(&run, &u0, j)?;
    let direct = hj_handle.evolve_hj(&u0, t)?;
    let gap = from_cl[from_cl.len() - 1].sup_distance(&direct)?;
    let tol = 2.0 * cl_handle.dx * (1.0 + t * j.lipschitz());
    Ok(CheckRecord::evaluate(
        "duality",
        gap,
        tol,
        format!("phi_hat_0 at t = {t}: primitive of the conservation-law run against the HJ handle"),
    ))
}
