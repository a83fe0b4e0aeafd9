//! The flux-limited Hamilton-Jacobi semi-group `u_t + H(x, u_x) = 0` with vertex
//! condition `u_t + min{A, H^{l,+}(u_x^-), H^{r,-}(u_x^+)} = 0` at `x = 0`.
//!
//! Three routes are provided:
//! - closed-form solutions for the canonical piecewise-linear data,
//! - the primitive `u = int rho` of a conservation-law run,
//! - a direct monotone node scheme.

use crate::cl::{max_dt, ClRun, Schedule};
use crate::error::{Error, Result};
use crate::flux::{CanonicalDatum, DatumShape};
use crate::grid::{NodeField, SLOPE_TOL};
use crate::junction::JunctionModel;

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::Time(t))
    }
}

fn canonical_sides(j: &JunctionModel, shape: DatumShape, a: f64) -> Result<(f64, f64)> {
    CanonicalDatum::new(shape, a).sides(j)
}

/// `S_bar(t, phi_hat_0)(x)`, the solution with limiter `A_max` from `phi_hat_0 = R^l x 1_{x<0}`.
pub fn exact_bar_s_phi0(j: &JunctionModel, t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    let a_max = j.a_max();
    let right_edge = t * j.right.derivative(0.0)?;
    let left_edge = t * j.left.derivative(j.left.rmax())?;
    if x >= right_edge {
        Ok(0.0)
    } else if x <= left_edge {
        Ok(j.left.rmax() * x)
    } else if x < 0.0 {
        Ok(-t * j.left.truncated_conjugate(a_max, x / t)?)
    } else {
        Ok(-t * j.right.truncated_conjugate(a_max, x / t)?)
    }
}

/// Interval `[t (H^l)'(p^{l,+}_a), t (H^r)'(p^{r,-}_a)]` on which `S^a(t, phi_hat_0)`
/// equals `phi_hat_a - t a`.
pub fn vertex_fan(j: &JunctionModel, a: f64, t: f64) -> Result<(f64, f64)> {
    let (pl, pr) = canonical_sides(j, DatumShape::PhiHat, a)?;
    Ok((t * j.left.derivative(pl)?, t * j.right.derivative(pr)?))
}

/// `S^a(t, phi_hat_0)(x)`.
pub fn exact_sa_phi0(j: &JunctionModel, a: f64, t: f64, x: f64) -> Result<f64> {
    check_time(t)?;
    let (lo, hi) = vertex_fan(j, a, t)?;
    if x >= lo && x <= hi {
        exact_sa_phia(j, a, t, x)
    } else {
        exact_bar_s_phi0(j, t, x)
    }
}

/// `S^a(t, phi_hat_a)(x) = phi_hat_a(x) - t a`.
pub fn exact_sa_phia(j: &JunctionModel, a: f64, t: f64, x: f64) -> Result<f64> {
    let (pl, pr) = canonical_sides(j, DatumShape::PhiHat, a)?;
    let phi = if x <= 0.0 { pl * x } else { pr * x };
    Ok(phi - t * a)
}

/// `S^{A}(t, phi_check_a)(x)` for the model limiter `A`:
/// `max{phi_check_a(x) - a t, phi_hat_A(x) - A t}`.
///
/// For `a <= A` the first term dominates everywhere and the check profile just moves
/// down at rate `a`; for `a > A` the vertex pins the value to `-A t`.
pub fn exact_s_phia_check(j: &JunctionModel, a: f64, t: f64, x: f64) -> Result<f64> {
    let (cl, cr) = canonical_sides(j, DatumShape::PhiCheck, a)?;
    let check = if x <= 0.0 { cl * x } else { cr * x } - a * t;
    let hat = exact_sa_phia(j, j.limiter, t, x)?;
    Ok(check.max(hat))
}

/// Samples one of the exact oracles on the nodes of `grid`.
pub fn exact_field(
    grid: crate::grid::Grid,
    t: f64,
    f: impl Fn(f64) -> Result<f64>,
) -> Result<NodeField> {
    let values = (0..grid.n_nodes())
        .map(|k| f(grid.node_x(k)))
        .collect::<Result<Vec<_>>>()?;
    NodeField::new(grid, values, t)
}

/// Primitive of each snapshot of a conservation-law run:
/// `u(t, x_min) = u0(x_min) - int_0^t F(x_min)` and `u(t, x_k) = u(t, x_min) + dx sum rho`.
pub fn hj_from_cl(run: &ClRun, u0: &NodeField, j: &JunctionModel) -> Result<Vec<NodeField>> {
    let first = run
        .snapshots
        .first()
        .ok_or_else(|| Error::Precondition("empty run".into()))?;
    if !first.grid.same_as(&u0.grid) {
        return Err(Error::GridMismatch("run and u0 live on different grids".into()));
    }
    let dx = u0.grid.dx();
    if first.time == 0.0 {
        for (i, (w, rho)) in u0.values.windows(2).zip(&first.values).enumerate() {
            if ((w[1] - w[0]) / dx - rho).abs() > SLOPE_TOL.max(1e-9 * rho.abs()) {
                return Err(Error::Precondition(format!(
                    "u0 slope in cell {i} does not match the initial density"
                )));
            }
        }
    }
    let mut out = Vec::with_capacity(run.snapshots.len());
    for (snap, flux_int) in run.snapshots.iter().zip(&run.left_boundary_integral) {
        let mut values = Vec::with_capacity(u0.grid.n_nodes());
        let mut acc = u0.values[0] - flux_int;
        values.push(acc);
        for rho in &snap.values {
            acc += dx * rho;
            values.push(acc);
        }
        let field = NodeField::new(snap.grid, values, snap.time)?;
        field.validate_lip(j)?;
        out.push(field);
    }
    Ok(out)
}

/// One step of the monotone node scheme `u_k <- u_k - dt Hhat(D-u_k, D+u_k)`.
pub fn hj_step(u: &mut NodeField, j: &JunctionModel, dt: f64, slopes: &mut Vec<f64>) -> Result<()> {
    let dx = u.grid.dx();
    let max = max_dt(j, dx, 1.0);
    if !(dt.is_finite() && dt >= 0.0) || dt > max * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, max });
    }
    let n_left = u.grid.n_left();
    slopes.clear();
    for (i, w) in u.values.windows(2).enumerate() {
        let rmax = if i < n_left {
            j.left.rmax()
        } else {
            j.right.rmax()
        };
        let s = (w[1] - w[0]) / dx;
        if !(s >= -SLOPE_TOL && s <= rmax + SLOPE_TOL) {
            return Err(Error::SlopeOutOfClass {
                x: u.grid.cell_center(i),
                slope: s,
                max: rmax,
            });
        }
        slopes.push(s.clamp(0.0, rmax));
    }
    let n = u.values.len();
    for (k, v) in u.values.iter_mut().enumerate() {
        let d_minus = if k == 0 { slopes[0] } else { slopes[k - 1] };
        let d_plus = if k == n - 1 { slopes[n - 2] } else { slopes[k] };
        let h = match k.cmp(&n_left) {
            std::cmp::Ordering::Less => j
                .left
                .demand_unchecked(d_minus)
                .min(j.left.supply_unchecked(d_plus)),
            std::cmp::Ordering::Greater => j
                .right
                .demand_unchecked(d_minus)
                .min(j.right.supply_unchecked(d_plus)),
            std::cmp::Ordering::Equal => j.flux_unchecked(d_minus, d_plus),
        };
        *v -= dt * h;
    }
    u.time += dt;
    Ok(())
}

/// Runs the direct scheme from `u0` to `t_end` with steps of `cfl dx / L`.
pub fn hj_direct_solve(
    u0: &NodeField,
    j: &JunctionModel,
    t_end: f64,
    cfl: f64,
) -> Result<NodeField> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::Precondition(format!("cfl must be in (0, 1], got {cfl}")));
    }
    u0.validate_lip(j)?;
    let schedule = Schedule::new(t_end, max_dt(j, u0.grid.dx(), cfl), &[])?;
    let mut u = u0.clone();
    u.time = 0.0;
    let mut slopes = Vec::new();
    for s in schedule {
        hj_step(&mut u, j, s.dt, &mut slopes)?;
        u.time = s.time;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flux::ConcaveFlux;
    use crate::grid::Grid;

    fn model(a: f64) -> JunctionModel {
        let h = ConcaveFlux::greenshields();
        JunctionModel::new(h.clone(), h, a).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bar_s_examples() {
        let j = model(0.25);
        assert!(close(exact_bar_s_phi0(&j, 1.0, 0.0).unwrap(), -0.25, 1e-15));
        assert_eq!(exact_bar_s_phi0(&j, 1.0, 1.5).unwrap(), 0.0);
        assert_eq!(exact_bar_s_phi0(&j, 1.0, -1.5).unwrap(), -1.5);
        assert!(matches!(exact_bar_s_phi0(&j, 0.0, 0.0), Err(Error::Time(_))));
    }

    #[test]
    fn sa_phi0_examples() {
        let j = model(0.1875);
        assert_eq!(vertex_fan(&j, 0.1875, 1.0).unwrap(), (-0.5, 0.5));
        assert!(close(exact_sa_phi0(&j, 0.1875, 1.0, 0.0).unwrap(), -0.1875, 1e-15));
        assert!(close(exact_sa_phi0(&j, 0.1875, 1.0, 0.25).unwrap(), -0.125, 1e-15));
        assert!(close(exact_sa_phi0(&j, 0.25, 1.0, 0.0).unwrap(), -0.25, 1e-15));
    }

    #[test]
    fn sa_phia_examples() {
        let j = model(0.25);
        assert!(close(exact_sa_phia(&j, 0.1875, 2.0, -1.0).unwrap(), -1.125, 1e-15));
        assert_eq!(exact_sa_phia(&j, 0.0, 5.0, 0.0).unwrap(), 0.0);
        assert!(close(exact_sa_phia(&j, 0.25, 1.0, 1.0).unwrap(), 0.25, 1e-15));
    }

    #[test]
    fn check_profile_examples() {
        let j = model(0.1875);
        assert!(close(exact_s_phia_check(&j, 0.1875, 1.0, 0.0).unwrap(), -0.1875, 1e-15));
        assert_eq!(exact_s_phia_check(&j, 0.0, 3.0, -1.0).unwrap(), 0.0);
        assert!(close(exact_s_phia_check(&j, 0.25, 1.0, 0.0).unwrap(), -0.1875, 1e-15));
    }

    #[test]
    fn direct_scheme_moves_phi_hat_at_rate_a() {
        let j = model(0.1875);
        let g = Grid::symmetric(1.0, 1.0 / 100.0).unwrap();
        let u0 = NodeField::canonical(g, &j, &CanonicalDatum::new(DatumShape::PhiHat, 0.1875))
            .unwrap();
        let u = hj_direct_solve(&u0, &j, 0.75, 0.8).unwrap();
        assert!(close(u.at_junction(), -0.1875 * 0.75, 1e-13));
    }

    #[test]
    fn constant_right_data_frozen() {
        let j = model(0.1875);
        let g = Grid::symmetric(1.0, 0.01).unwrap();
        let u0 = NodeField::from_fn(g, |_| 3.0);
        let u = hj_direct_solve(&u0, &j, 0.5, 0.8).unwrap();
        assert_eq!(u.values, u0.values);
    }

    #[test]
    fn slope_class_enforced() {
        let j = model(0.1875);
        let g = Grid::symmetric(1.0, 0.1).unwrap();
        let u0 = NodeField::from_fn(g, |x| 2.0 * x);
        assert!(matches!(
            hj_direct_solve(&u0, &j, 0.5, 0.8),
            Err(Error::SlopeOutOfClass { .. })
        ));
    }
}
