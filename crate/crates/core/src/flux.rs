//! Strictly concave traffic-type fluxes `H: [0, R] -> R` with `H(0) = H(R) = 0`.
//!
//! Two kinds are supported. The quadratic kind `H(p) = 4 h p (R - p) / R^2` has
//! closed forms for every query. The piecewise-linear kind is given by its
//! vertices and every query is answered by walking or enumerating them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::junction::JunctionModel;

/// Absolute slack accepted on densities before they are clamped into `[0, R]`.
pub const DENSITY_TOL: f64 = 1e-9;

/// Relative tolerance under which a level is treated as the flux maximum.
pub const PEAK_TOL: f64 = 1e-12;

/// Serialized form of a flux, as it appears in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FluxSpec {
    Quadratic { rmax: f64, hmax: f64 },
    PiecewiseLinear { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Quadratic {
        rmax: f64,
        hmax: f64,
    },
    PiecewiseLinear {
        points: Vec<(f64, f64)>,
        /// `slopes[i]` is the slope of the segment `points[i] -> points[i + 1]`.
        slopes: Vec<f64>,
        peak: usize,
    },
}

/// A validated strictly concave flux. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FluxSpec", into = "FluxSpec")]
pub struct ConcaveFlux {
    shape: Shape,
}

impl TryFrom<FluxSpec> for ConcaveFlux {
    type Error = Error;

    fn try_from(spec: FluxSpec) -> Result<Self> {
        match spec {
            FluxSpec::Quadratic { rmax, hmax } => ConcaveFlux::quadratic(rmax, hmax),
            FluxSpec::PiecewiseLinear { points } => {
                ConcaveFlux::piecewise_linear(points.iter().map(|p| (p[0], p[1])).collect())
            }
        }
    }
}

impl From<ConcaveFlux> for FluxSpec {
    fn from(flux: ConcaveFlux) -> Self {
        flux.spec()
    }
}

impl ConcaveFlux {
    pub fn quadratic(rmax: f64, hmax: f64) -> Result<Self> {
        if !(rmax.is_finite() && rmax > 0.0) {
            return Err(Error::InvalidFlux(format!("rmax must be positive, got {rmax}")));
        }
        if !(hmax.is_finite() && hmax > 0.0) {
            return Err(Error::InvalidFlux(format!("hmax must be positive, got {hmax}")));
        }
        Ok(Self {
            shape: Shape::Quadratic { rmax, hmax },
        })
    }

    /// The default test flux `H(p) = p (1 - p)`.
    pub fn greenshields() -> Self {
        Self {
            shape: Shape::Quadratic {
                rmax: 1.0,
                hmax: 0.25,
            },
        }
    }

    pub fn piecewise_linear(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidFlux(
                "piecewise-linear flux needs at least three vertices".into(),
            ));
        }
        if points.iter().any(|(p, h)| !p.is_finite() || !h.is_finite()) {
            return Err(Error::InvalidFlux("non-finite vertex".into()));
        }
        let (p0, h0) = points[0];
        let (pn, hn) = points[points.len() - 1];
        if p0 != 0.0 || h0 != 0.0 {
            return Err(Error::InvalidFlux("first vertex must be (0, 0)".into()));
        }
        if hn != 0.0 || pn <= 0.0 {
            return Err(Error::InvalidFlux("last vertex must be (R, 0) with R > 0".into()));
        }
        let mut slopes = Vec::with_capacity(points.len() - 1);
        for w in points.windows(2) {
            let (pa, ha) = w[0];
            let (pb, hb) = w[1];
            if pb <= pa {
                return Err(Error::InvalidFlux(
                    "vertex densities must be strictly increasing".into(),
                ));
            }
            slopes.push((hb - ha) / (pb - pa));
        }
        if slopes.windows(2).any(|s| s[1] >= s[0]) {
            return Err(Error::InvalidFlux(
                "chord slopes must be strictly decreasing".into(),
            ));
        }
        if slopes.iter().any(|&s| s == 0.0) {
            return Err(Error::InvalidFlux(
                "flat segment: the maximizer must be unique".into(),
            ));
        }
        // Strictly decreasing slopes with H(0) = H(R) = 0 force slopes[0] > 0 > slopes[last],
        // so the peak is the vertex where the slope changes sign.
        let peak = slopes.iter().position(|&s| s < 0.0).unwrap_or(slopes.len());
        Ok(Self {
            shape: Shape::PiecewiseLinear {
                points,
                slopes,
                peak,
            },
        })
    }

    pub fn spec(&self) -> FluxSpec {
        match &self.shape {
            Shape::Quadratic { rmax, hmax } => FluxSpec::Quadratic {
                rmax: *rmax,
                hmax: *hmax,
            },
            Shape::PiecewiseLinear { points, .. } => FluxSpec::PiecewiseLinear {
                points: points.iter().map(|&(p, h)| [p, h]).collect(),
            },
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.shape, Shape::Quadratic { .. })
    }

    /// Density capacity `R`.
    pub fn rmax(&self) -> f64 {
        match &self.shape {
            Shape::Quadratic { rmax, .. } => *rmax,
            Shape::PiecewiseLinear { points, .. } => points[points.len() - 1].0,
        }
    }

    /// Tolerance used when comparing flow values produced by this flux.
    pub fn flow_tol(&self) -> f64 {
        if self.is_quadratic() {
            1e-12
        } else {
            1e-9
        }
    }

    /// Validates a density and clamps round-off excursions into `[0, R]`.
    pub fn check_density(&self, p: f64) -> Result<f64> {
        let rmax = self.rmax();
        if !p.is_finite() || p < -DENSITY_TOL || p > rmax + DENSITY_TOL {
            return Err(Error::Domain {
                value: p,
                max: rmax,
            });
        }
        Ok(p.clamp(0.0, rmax))
    }

    fn check_level(&self, a: f64) -> Result<f64> {
        let top = self.max_flow();
        if !a.is_finite() || a < 0.0 || a > top * (1.0 + PEAK_TOL) {
            return Err(Error::Level { level: a, max: top });
        }
        Ok(a.min(top))
    }

    pub fn eval(&self, p: f64) -> Result<f64> {
        Ok(self.h(self.check_density(p)?))
    }

    /// `H(p)` for a density already known to lie in `[0, R]`.
    pub(crate) fn h(&self, p: f64) -> f64 {
        match &self.shape {
            Shape::Quadratic { rmax, hmax } => 4.0 * hmax * p * (rmax - p) / (rmax * rmax),
            Shape::PiecewiseLinear { points, slopes, .. } => {
                let i = segment_of(points, p);
                points[i].1 + slopes[i] * (p - points[i].0)
            }
        }
    }

    /// `H'(p)`. At a vertex of a piecewise-linear flux the slope of the segment to the
    /// right is returned, except at `R` where the last slope is used.
    pub fn derivative(&self, p: f64) -> Result<f64> {
        let p = self.check_density(p)?;
        Ok(match &self.shape {
            Shape::Quadratic { rmax, hmax } => 4.0 * hmax * (rmax - 2.0 * p) / (rmax * rmax),
            Shape::PiecewiseLinear { points, slopes, .. } => slopes[segment_of(points, p)],
        })
    }

    /// Generalized inverse of `H'`: the density `p` with `v` in the superdifferential of `H`
    /// at `p`, clamped to `[0, R]`. Nonincreasing in `v`.
    pub fn inverse_derivative(&self, v: f64) -> f64 {
        match &self.shape {
            Shape::Quadratic { rmax, hmax } => {
                (0.5 * rmax - v * rmax * rmax / (8.0 * hmax)).clamp(0.0, *rmax)
            }
            Shape::PiecewiseLinear { points, slopes, .. } => {
                if v >= slopes[0] {
                    return 0.0;
                }
                for k in 1..slopes.len() {
                    if v >= slopes[k] {
                        return points[k].0;
                    }
                }
                points[points.len() - 1].0
            }
        }
    }

    /// Global Lipschitz constant `max |H'|`.
    pub fn lipschitz(&self) -> f64 {
        match &self.shape {
            Shape::Quadratic { rmax, hmax } => 4.0 * hmax / rmax,
            Shape::PiecewiseLinear { slopes, .. } => {
                slopes[0].abs().max(slopes[slopes.len() - 1].abs())
            }
        }
    }

    /// The unique maximizer `p*` and the maximum `H(p*)`.
    pub fn critical(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Quadratic { rmax, hmax } => (0.5 * rmax, *hmax),
            Shape::PiecewiseLinear { points, peak, .. } => points[*peak],
        }
    }

    pub fn max_flow(&self) -> f64 {
        self.critical().1
    }

    /// Smallest and largest solutions of `H(p) = a`.
    pub fn roots(&self, a: f64) -> Result<(f64, f64)> {
        let a = self.check_level(a)?;
        let (p_star, top) = self.critical();
        if a >= top * (1.0 - PEAK_TOL) {
            return Ok((p_star, p_star));
        }
        if a == 0.0 {
            return Ok((0.0, self.rmax()));
        }
        Ok(match &self.shape {
            Shape::Quadratic { rmax, hmax } => {
                // p (R - p) = c; take the large root directly and the small one from the
                // product of roots to avoid cancellation.
                let c = a * rmax * rmax / (4.0 * hmax);
                let disc = (rmax * rmax - 4.0 * c).max(0.0).sqrt();
                let p_plus = 0.5 * (rmax + disc);
                (c / p_plus, p_plus)
            }
            Shape::PiecewiseLinear {
                points,
                slopes,
                peak,
            } => {
                let mut lo = p_star;
                for i in 0..*peak {
                    if a <= points[i + 1].1 {
                        lo = points[i].0 + (a - points[i].1) / slopes[i];
                        break;
                    }
                }
                let mut hi = p_star;
                for i in *peak..slopes.len() {
                    if a >= points[i + 1].1 {
                        hi = points[i].0 + (a - points[i].1) / slopes[i];
                        break;
                    }
                }
                (lo, hi)
            }
        })
    }

    /// Demand (sending) function: the smallest nondecreasing map above `H`.
    pub fn demand(&self, p: f64) -> Result<f64> {
        Ok(self.demand_unchecked(self.check_density(p)?))
    }

    /// Supply (receiving) function: the smallest nonincreasing map above `H`.
    pub fn supply(&self, p: f64) -> Result<f64> {
        Ok(self.supply_unchecked(self.check_density(p)?))
    }

    pub(crate) fn demand_unchecked(&self, p: f64) -> f64 {
        let (p_star, top) = self.critical();
        if p <= p_star {
            self.h(p)
        } else {
            top
        }
    }

    pub(crate) fn supply_unchecked(&self, p: f64) -> f64 {
        let (p_star, top) = self.critical();
        if p <= p_star {
            top
        } else {
            self.h(p)
        }
    }

    /// A maximizer `y` of `-v y + min{H(y), a}` over `[0, R]`.
    pub fn conjugate_argmax(&self, a: f64, v: f64) -> Result<f64> {
        let a = self.check_level(a)?;
        let (lo, hi) = self.roots(a)?;
        Ok(match &self.shape {
            Shape::Quadratic { .. } => {
                if v > 0.0 {
                    self.inverse_derivative(v).min(lo)
                } else if v < 0.0 {
                    self.inverse_derivative(v).max(hi)
                } else {
                    lo
                }
            }
            Shape::PiecewiseLinear { points, .. } => {
                // min{H, a} is piecewise linear with vertices at the original vertices
                // below the cap plus the two cap crossings.
                let candidates = points
                    .iter()
                    .map(|&(p, _)| p)
                    .filter(|&p| self.h(p) <= a)
                    .chain([lo, hi]);
                let mut best = (f64::NEG_INFINITY, 0.0);
                for y in candidates {
                    let payoff = -v * y + self.h(y).min(a);
                    if payoff > best.0 {
                        best = (payoff, y);
                    }
                }
                best.1
            }
        })
    }

    /// Truncated Legendre conjugate `sup_{y in [0, R]} (-v y + min{H(y), a})`.
    pub fn truncated_conjugate(&self, a: f64, v: f64) -> Result<f64> {
        let y = self.conjugate_argmax(a, v)?;
        Ok(-v * y + self.h(y).min(a))
    }
}

/// Index of the segment containing `p`, using the right segment at interior vertices.
fn segment_of(points: &[(f64, f64)], p: f64) -> usize {
    let last = points.len() - 2;
    match points.binary_search_by(|probe| probe.0.total_cmp(&p)) {
        Ok(i) => i.min(last),
        Err(i) => i.saturating_sub(1).min(last),
    }
}

/// Which canonical datum a [`CanonicalDatum`] denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatumShape {
    /// Piecewise-linear value function with slopes `(p^{l,+}_A, p^{r,-}_A)`.
    PhiHat,
    /// Piecewise-linear value function with slopes `(p^{l,-}_A, p^{r,+}_A)`.
    PhiCheck,
    /// Piecewise-constant density `(p^{l,+}_A, p^{r,-}_A)`.
    PsiHat,
    /// Piecewise-constant density `(p^{l,-}_A, p^{r,+}_A)`.
    PsiCheck,
}

impl DatumShape {
    pub fn is_density(self) -> bool {
        matches!(self, DatumShape::PsiHat | DatumShape::PsiCheck)
    }
}

/// One of the four canonical self-similar data attached to a flux level `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalDatum {
    pub shape: DatumShape,
    pub level: f64,
}

impl CanonicalDatum {
    pub fn new(shape: DatumShape, level: f64) -> Self {
        Self { shape, level }
    }

    /// The one-sided densities (slopes, for the value-function shapes) left and right of 0.
    pub fn sides(&self, junction: &JunctionModel) -> Result<(f64, f64)> {
        let a_max = junction.a_max();
        if !self.level.is_finite() || self.level < 0.0 || self.level > a_max * (1.0 + PEAK_TOL)
        {
            return Err(Error::Level {
                level: self.level,
                max: a_max,
            });
        }
        let level = self.level.min(a_max);
        let (l_minus, l_plus) = junction.left.roots(level)?;
        let (r_minus, r_plus) = junction.right.roots(level)?;
        Ok(match self.shape {
            DatumShape::PhiHat | DatumShape::PsiHat => (l_plus, r_minus),
            DatumShape::PhiCheck | DatumShape::PsiCheck => (l_minus, r_plus),
        })
    }

    /// Value (phi shapes) or density (psi shapes) at `x`. Densities at `x = 0` take the
    /// left value.
    pub fn eval(&self, junction: &JunctionModel, x: f64) -> Result<f64> {
        let (left, right) = self.sides(junction)?;
        Ok(if self.shape.is_density() {
            if x <= 0.0 {
                left
            } else {
                right
            }
        } else if x <= 0.0 {
            left * x
        } else {
            right * x
        })
    }
}

/// Free-function form of [`CanonicalDatum::eval`].
pub fn canonical_eval(datum: &CanonicalDatum, junction: &JunctionModel, x: f64) -> Result<f64> {
    datum.eval(junction, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn tent() -> ConcaveFlux {
        ConcaveFlux::piecewise_linear(vec![(0.0, 0.0), (0.5, 0.25), (1.0, 0.0)]).unwrap()
    }

    fn four_piece() -> ConcaveFlux {
        ConcaveFlux::piecewise_linear(vec![
            (0.0, 0.0),
            (0.2, 0.18),
            (0.5, 0.3),
            (0.8, 0.18),
            (1.1, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        let h = ConcaveFlux::greenshields();
        assert!(close(h.eval(0.5).unwrap(), 0.25, 1e-15));
        assert_eq!(h.eval(0.0).unwrap(), 0.0);
        assert!(close(h.eval(0.25).unwrap(), 0.1875, 1e-15));
        assert_eq!(h.eval(1.0).unwrap(), 0.0);
    }

    #[test]
    fn eval_rejects_out_of_range() {
        let h = ConcaveFlux::greenshields();
        assert!(matches!(h.eval(1.1), Err(Error::Domain { .. })));
        assert!(matches!(h.eval(-0.01), Err(Error::Domain { .. })));
        // round-off slack is clamped, not rejected
        assert_eq!(h.eval(1.0 + 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn critical_examples() {
        assert_eq!(ConcaveFlux::greenshields().critical(), (0.5, 0.25));
        assert_eq!(tent().critical(), (0.5, 0.25));
        assert_eq!(ConcaveFlux::quadratic(2.0, 0.5).unwrap().critical(), (1.0, 0.5));
        assert_eq!(four_piece().critical(), (0.5, 0.3));
    }

    #[test]
    fn roots_examples() {
        let h = ConcaveFlux::greenshields();
        let (lo, hi) = h.roots(0.1875).unwrap();
        assert!(close(lo, 0.25, 1e-15) && close(hi, 0.75, 1e-15));
        assert_eq!(h.roots(0.0).unwrap(), (0.0, 1.0));
        assert_eq!(h.roots(0.25).unwrap(), (0.5, 0.5));
        assert!(matches!(h.roots(0.3), Err(Error::Level { .. })));
        assert!(matches!(h.roots(-0.1), Err(Error::Level { .. })));
    }

    #[test]
    fn piecewise_roots_lie_on_branches() {
        let h = four_piece();
        for k in 0..=30 {
            let a = 0.3 * k as f64 / 30.0;
            let (lo, hi) = h.roots(a).unwrap();
            assert!(lo <= 0.5 && hi >= 0.5);
            assert!(close(h.eval(lo).unwrap(), a, 1e-12), "a={a} lo={lo}");
            assert!(close(h.eval(hi).unwrap(), a, 1e-12), "a={a} hi={hi}");
        }
    }

    #[test]
    fn envelopes() {
        let h = ConcaveFlux::greenshields();
        assert_eq!(h.demand(0.7).unwrap(), 0.25);
        assert!(close(h.supply(0.7).unwrap(), 0.21, 1e-15));
        assert_eq!(h.demand(0.0).unwrap(), 0.0);
        assert_eq!(h.supply(0.2).unwrap(), 0.25);
    }

    #[test]
    fn conjugate_examples() {
        let h = ConcaveFlux::greenshields();
        assert!(close(h.truncated_conjugate(0.25, 0.0).unwrap(), 0.25, 1e-15));
        assert!(close(h.truncated_conjugate(0.25, 1.0).unwrap(), 0.0, 1e-15));
        assert!(close(h.truncated_conjugate(0.1875, 0.0).unwrap(), 0.1875, 1e-15));
        // unconstrained branch: H'(y) = -0.5 at y = 0.75, H = 0.1875
        assert!(close(h.truncated_conjugate(0.25, -0.5).unwrap(), 0.5625, 1e-15));
        assert!(matches!(
            h.truncated_conjugate(0.3, 0.0),
            Err(Error::Level { .. })
        ));
    }

    #[test]
    fn inverse_derivative_piecewise() {
        let h = four_piece();
        // slopes: 0.9, 0.4, -0.4, -0.6
        assert_eq!(h.inverse_derivative(1.0), 0.0);
        assert_eq!(h.inverse_derivative(0.6), 0.2);
        assert_eq!(h.inverse_derivative(0.0), 0.5);
        assert_eq!(h.inverse_derivative(-0.9), 1.1);
        assert_eq!(h.inverse_derivative(-0.5), 0.8);
    }

    #[test]
    fn invalid_fluxes_rejected() {
        assert!(ConcaveFlux::quadratic(0.0, 1.0).is_err());
        assert!(ConcaveFlux::quadratic(1.0, -1.0).is_err());
        assert!(ConcaveFlux::piecewise_linear(vec![(0.0, 0.0), (1.0, 0.0)]).is_err());
        // not concave
        assert!(ConcaveFlux::piecewise_linear(vec![
            (0.0, 0.0),
            (0.3, 0.1),
            (0.6, 0.3),
            (1.0, 0.0)
        ])
        .is_err());
        // flat top
        assert!(ConcaveFlux::piecewise_linear(vec![
            (0.0, 0.0),
            (0.3, 0.2),
            (0.6, 0.2),
            (1.0, 0.0)
        ])
        .is_err());
        // H(R) != 0
        assert!(ConcaveFlux::piecewise_linear(vec![(0.0, 0.0), (0.5, 0.2), (1.0, 0.1)]).is_err());
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"kind":"piecewise_linear","points":[[0,0],[0.5,0.25],[1,0]]}"#;
        let h: ConcaveFlux = serde_json::from_str(json).unwrap();
        assert_eq!(h, tent());
        let q: ConcaveFlux =
            serde_json::from_str(r#"{"kind":"quadratic","rmax":1.0,"hmax":0.25}"#).unwrap();
        assert_eq!(q, ConcaveFlux::greenshields());
        let back: ConcaveFlux = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
        assert_eq!(back, q);
        assert!(serde_json::from_str::<ConcaveFlux>(r#"{"kind":"quadratic","rmax":-1,"hmax":1}"#)
            .is_err());
    }

    #[test]
    fn canonical_examples() {
        let h = ConcaveFlux::greenshields();
        let j = JunctionModel::new(h.clone(), h, 0.1875).unwrap();
        let phi_hat = CanonicalDatum::new(DatumShape::PhiHat, 0.1875);
        assert!(close(canonical_eval(&phi_hat, &j, -1.0).unwrap(), -0.75, 1e-15));
        assert_eq!(canonical_eval(&phi_hat, &j, 0.0).unwrap(), 0.0);
        let psi_check = CanonicalDatum::new(DatumShape::PsiCheck, 0.1875);
        assert!(close(canonical_eval(&psi_check, &j, 2.0).unwrap(), 0.75, 1e-15));
        assert!(close(canonical_eval(&psi_check, &j, -2.0).unwrap(), 0.25, 1e-15));
        let too_high = CanonicalDatum::new(DatumShape::PsiHat, 0.3);
        assert!(matches!(too_high.eval(&j, 1.0), Err(Error::Level { .. })));
    }
}
