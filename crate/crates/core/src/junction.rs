//! The junction at `x = 0`: flux-limited coupling, germ membership and the exact
//! self-similar Riemann solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flux::{ConcaveFlux, PEAK_TOL};

/// Two fluxes joined at `x = 0` with a flux limiter `A in [0, A_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionModel {
    pub left: ConcaveFlux,
    pub right: ConcaveFlux,
    pub limiter: f64,
}

impl JunctionModel {
    pub fn new(left: ConcaveFlux, right: ConcaveFlux, limiter: f64) -> Result<Self> {
        let a_max = left.max_flow().min(right.max_flow());
        if !limiter.is_finite() || limiter < 0.0 || limiter > a_max * (1.0 + PEAK_TOL) {
            return Err(Error::Level {
                level: limiter,
                max: a_max,
            });
        }
        Ok(Self {
            left,
            right,
            limiter: limiter.min(a_max),
        })
    }

    /// Same fluxes on both sides, limiter at `A_max`.
    pub fn symmetric(flux: ConcaveFlux) -> Self {
        let a = flux.max_flow();
        Self {
            left: flux.clone(),
            right: flux,
            limiter: a,
        }
    }

    pub fn with_limiter(&self, limiter: f64) -> Result<Self> {
        Self::new(self.left.clone(), self.right.clone(), limiter)
    }

    /// `min{max H^l, max H^r}`.
    pub fn a_max(&self) -> f64 {
        self.left.max_flow().min(self.right.max_flow())
    }

    /// Largest wave speed over both sides.
    pub fn lipschitz(&self) -> f64 {
        self.left.lipschitz().max(self.right.lipschitz())
    }

    pub fn flow_tol(&self) -> f64 {
        self.left.flow_tol().max(self.right.flow_tol())
    }

    pub fn junction_flux(&self, q_left: f64, q_right: f64) -> Result<f64> {
        let a = self.left.check_density(q_left)?;
        let b = self.right.check_density(q_right)?;
        Ok(self.flux_unchecked(a, b))
    }

    pub(crate) fn flux_unchecked(&self, a: f64, b: f64) -> f64 {
        self.limiter
            .min(self.left.demand_unchecked(a))
            .min(self.right.supply_unchecked(b))
    }

    pub fn germ_contains(&self, pair: &TracePair, tol: f64) -> Result<bool> {
        let hl = self.left.eval(pair.q_minus)?;
        let hr = self.right.eval(pair.q_plus)?;
        let f = self.junction_flux(pair.q_minus, pair.q_plus)?;
        Ok((hl - hr).abs() <= tol && (hl - f).abs() <= tol)
    }

    /// `Phi^l(q1-, q2-) - Phi^r(q1+, q2+)` with the Kruzhkov entropy flux
    /// `Phi(a, b) = sign(a - b) (H(a) - H(b))`. Nonnegative for an L1-dissipative germ.
    pub fn germ_dissipative(&self, p1: &TracePair, p2: &TracePair) -> Result<f64> {
        let tol = self.flow_tol();
        for p in [p1, p2] {
            if !self.germ_contains(p, tol)? {
                return Err(Error::Precondition(format!(
                    "pair ({}, {}) is not in the germ",
                    p.q_minus, p.q_plus
                )));
            }
        }
        let left = kruzhkov_flux(&self.left, p1.q_minus, p2.q_minus)?;
        let right = kruzhkov_flux(&self.right, p1.q_plus, p2.q_plus)?;
        Ok(left - right)
    }

    /// One-sided traces of the self-similar junction Riemann solution.
    pub fn riemann_traces(&self, rho_left: f64, rho_right: f64) -> Result<TracePair> {
        let a = self.left.check_density(rho_left)?;
        let b = self.right.check_density(rho_right)?;
        let f = self.flux_unchecked(a, b);
        let tol = self.flow_tol();
        let (l_star, _) = self.left.critical();
        let (r_star, _) = self.right.critical();
        let q_minus = if a <= l_star && (self.left.h(a) - f).abs() <= tol {
            a
        } else {
            self.left.roots(f)?.1
        };
        let q_plus = if b >= r_star && (self.right.h(b) - f).abs() <= tol {
            b
        } else {
            self.right.roots(f)?.0
        };
        Ok(TracePair {
            q_minus,
            q_plus,
            flux_value: f,
        })
    }

    /// The self-similar junction Riemann solution evaluated at `xi = x / t`. `xi = 0`
    /// returns the left trace.
    pub fn riemann_profile(&self, rho_left: f64, rho_right: f64, xi: f64) -> Result<f64> {
        let traces = self.riemann_traces(rho_left, rho_right)?;
        let a = self.left.check_density(rho_left)?;
        let b = self.right.check_density(rho_right)?;
        debug_assert!(
            max_wave_speed(&self.left, a, traces.q_minus) <= 1e-12,
            "left waves must not move right"
        );
        debug_assert!(
            min_wave_speed(&self.right, traces.q_plus, b) >= -1e-12,
            "right waves must not move left"
        );
        if xi <= 0.0 {
            Ok(riemann_unchecked(&self.left, a, traces.q_minus, xi))
        } else {
            Ok(riemann_unchecked(&self.right, traces.q_plus, b, xi))
        }
    }

    /// Fan of wave speeds `[slowest, fastest]` emitted on each side of the junction.
    pub fn wave_speeds(&self, rho_left: f64, rho_right: f64) -> Result<((f64, f64), (f64, f64))> {
        let traces = self.riemann_traces(rho_left, rho_right)?;
        let a = self.left.check_density(rho_left)?;
        let b = self.right.check_density(rho_right)?;
        Ok((
            (
                min_wave_speed(&self.left, a, traces.q_minus),
                max_wave_speed(&self.left, a, traces.q_minus),
            ),
            (
                min_wave_speed(&self.right, traces.q_plus, b),
                max_wave_speed(&self.right, traces.q_plus, b),
            ),
        ))
    }
}

/// A pair of one-sided junction states with the flux carried through the junction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePair {
    pub q_minus: f64,
    pub q_plus: f64,
    pub flux_value: f64,
}

impl TracePair {
    /// A pair whose flux value is `H^l(q-)`.
    pub fn new(junction: &JunctionModel, q_minus: f64, q_plus: f64) -> Result<Self> {
        let q_minus = junction.left.check_density(q_minus)?;
        let q_plus = junction.right.check_density(q_plus)?;
        Ok(Self {
            q_minus,
            q_plus,
            flux_value: junction.left.h(q_minus),
        })
    }
}

pub fn junction_flux(j: &JunctionModel, q_left: f64, q_right: f64) -> Result<f64> {
    j.junction_flux(q_left, q_right)
}

pub fn germ_contains(j: &JunctionModel, pair: &TracePair, tol: f64) -> Result<bool> {
    j.germ_contains(pair, tol)
}

pub fn germ_dissipative(j: &JunctionModel, p1: &TracePair, p2: &TracePair) -> Result<f64> {
    j.germ_dissipative(p1, p2)
}

pub fn riemann_traces(j: &JunctionModel, rho_left: f64, rho_right: f64) -> Result<TracePair> {
    j.riemann_traces(rho_left, rho_right)
}

pub fn riemann_profile(j: &JunctionModel, rho_left: f64, rho_right: f64, xi: f64) -> Result<f64> {
    j.riemann_profile(rho_left, rho_right, xi)
}

fn kruzhkov_flux(flux: &ConcaveFlux, a: f64, b: f64) -> Result<f64> {
    let d = a - b;
    let s = if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    };
    Ok(s * (flux.eval(a)? - flux.eval(b)?))
}

/// Entropy solution of `rho_t + H(rho)_x = 0` with Riemann data `(a, b)` at `xi = x / t`.
/// A point exactly on a shock takes the left state.
pub fn classical_riemann(flux: &ConcaveFlux, a: f64, b: f64, xi: f64) -> Result<f64> {
    let a = flux.check_density(a)?;
    let b = flux.check_density(b)?;
    Ok(riemann_unchecked(flux, a, b, xi))
}

fn riemann_unchecked(flux: &ConcaveFlux, a: f64, b: f64, xi: f64) -> f64 {
    if a < b {
        let speed = (flux.h(b) - flux.h(a)) / (b - a);
        if xi <= speed {
            a
        } else {
            b
        }
    } else if a > b {
        // H concave and a > b: rarefaction, density nonincreasing in xi
        flux.inverse_derivative(xi).clamp(b, a)
    } else {
        a
    }
}

fn shock_or_fan(flux: &ConcaveFlux, a: f64, b: f64) -> Option<(f64, f64)> {
    if a < b {
        let s = (flux.h(b) - flux.h(a)) / (b - a);
        Some((s, s))
    } else if a > b {
        let slope = |p: f64| flux.derivative(p).unwrap_or(0.0);
        Some((slope(a), slope(b)))
    } else {
        None
    }
}

fn max_wave_speed(flux: &ConcaveFlux, a: f64, b: f64) -> f64 {
    shock_or_fan(flux, a, b).map_or(f64::NEG_INFINITY, |(_, hi)| hi)
}

fn min_wave_speed(flux: &ConcaveFlux, a: f64, b: f64) -> f64 {
    shock_or_fan(flux, a, b).map_or(f64::INFINITY, |(lo, _)| lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(a: f64) -> JunctionModel {
        let h = ConcaveFlux::greenshields();
        JunctionModel::new(h.clone(), h, a).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn limiter_range() {
        assert!(matches!(
            JunctionModel::new(ConcaveFlux::greenshields(), ConcaveFlux::greenshields(), 0.3),
            Err(Error::Level { .. })
        ));
        assert_eq!(model(0.25).a_max(), 0.25);
        let asym = JunctionModel::new(
            ConcaveFlux::quadratic(2.0, 0.5).unwrap(),
            ConcaveFlux::greenshields(),
            0.0,
        )
        .unwrap();
        assert_eq!(asym.a_max(), 0.25);
    }

    #[test]
    fn junction_flux_examples() {
        assert!(close(model(0.1875).junction_flux(0.5, 0.5).unwrap(), 0.1875, 1e-15));
        assert_eq!(model(0.25).junction_flux(0.0, 0.7).unwrap(), 0.0);
        assert!(close(model(0.1875).junction_flux(0.1, 0.9).unwrap(), 0.09, 1e-15));
        assert!(model(0.25).junction_flux(1.5, 0.0).is_err());
    }

    #[test]
    fn germ_examples() {
        let j = model(0.1875);
        let pair = |a, b| TracePair::new(&j, a, b).unwrap();
        assert!(j.germ_contains(&pair(0.75, 0.25), 1e-12).unwrap());
        assert!(!j.germ_contains(&pair(0.5, 0.5), 1e-12).unwrap());
        assert!(j.germ_contains(&pair(0.1, 0.9), 1e-12).unwrap());
    }

    #[test]
    fn dissipativity_examples() {
        let j = model(0.1875);
        let pair = |a, b| TracePair::new(&j, a, b).unwrap();
        let p1 = pair(0.75, 0.25);
        assert_eq!(j.germ_dissipative(&p1, &p1).unwrap(), 0.0);
        assert!(close(j.germ_dissipative(&p1, &pair(0.1, 0.1)).unwrap(), 0.0, 1e-15));
        assert!(j.germ_dissipative(&p1, &pair(0.9, 0.9)).unwrap() >= -1e-15);
        assert!(matches!(
            j.germ_dissipative(&p1, &pair(0.5, 0.5)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn riemann_trace_examples() {
        let t = model(0.1875).riemann_traces(0.5, 0.5).unwrap();
        assert!(close(t.q_minus, 0.75, 1e-15) && close(t.q_plus, 0.25, 1e-15));
        assert!(close(t.flux_value, 0.1875, 1e-15));

        let t = model(0.25).riemann_traces(0.2, 0.3).unwrap();
        assert!(close(t.q_minus, 0.2, 1e-15) && close(t.q_plus, 0.2, 1e-12));
        assert!(close(t.flux_value, 0.16, 1e-15));

        let t = model(0.1).riemann_traces(0.0, 0.0).unwrap();
        assert_eq!((t.q_minus, t.q_plus, t.flux_value), (0.0, 0.0, 0.0));
    }

    #[test]
    fn classical_riemann_examples() {
        let h = ConcaveFlux::greenshields();
        assert_eq!(classical_riemann(&h, 0.4, 0.4, 3.0).unwrap(), 0.4);
        // shock speed (0.25 - 0.1875) / 0.25 = 0.25
        assert_eq!(classical_riemann(&h, 0.25, 0.5, 0.2).unwrap(), 0.25);
        assert_eq!(classical_riemann(&h, 0.25, 0.5, 0.25).unwrap(), 0.25);
        assert_eq!(classical_riemann(&h, 0.25, 0.5, 0.3).unwrap(), 0.5);
        assert_eq!(classical_riemann(&h, 0.75, 0.25, 0.0).unwrap(), 0.5);
        assert_eq!(classical_riemann(&h, 0.75, 0.25, -0.6).unwrap(), 0.75);
        assert_eq!(classical_riemann(&h, 0.75, 0.25, 0.6).unwrap(), 0.25);
        assert!(close(classical_riemann(&h, 0.75, 0.25, 0.2).unwrap(), 0.4, 1e-15));
    }

    #[test]
    fn riemann_profile_examples() {
        let j = model(0.1875);
        assert!(close(j.riemann_profile(0.5, 0.5, -0.1).unwrap(), 0.75, 1e-15));
        assert_eq!(j.riemann_profile(0.5, 0.5, -0.3).unwrap(), 0.5);
        assert!(close(j.riemann_profile(0.5, 0.5, 0.1).unwrap(), 0.25, 1e-15));
        assert_eq!(j.riemann_profile(0.5, 0.5, 0.3).unwrap(), 0.5);
        assert!(close(j.riemann_profile(0.5, 0.5, 0.0).unwrap(), 0.75, 1e-15));
        for xi in [-2.0, -0.5, 0.5, 2.0] {
            assert_eq!(model(0.25).riemann_profile(0.0, 0.0, xi).unwrap(), 0.0);
        }
    }

    #[test]
    fn blocked_junction_jams_left_and_empties_right() {
        let t = model(0.0).riemann_traces(0.5, 0.5).unwrap();
        assert_eq!((t.q_minus, t.q_plus, t.flux_value), (1.0, 0.0, 0.0));
    }
}
