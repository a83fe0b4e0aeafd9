use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flux::{CanonicalDatum, DatumShape};
use crate::grid::{CellField, NodeField};
use crate::junction::TracePair;

use super::handle::SemigroupHandle;
use super::report::CheckRecord;

/// Limiter read off a conservation-law semi-group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimiterEstimate {
    pub value: f64,
    /// Cells adjacent to the junction at `t = 1`.
    pub traces: TracePair,
    /// `|H^l(q-) - H^r(q+)|` for those traces.
    pub rh_gap: f64,
}

/// `-u(1, 0)` for the run started from `phi_hat_0`.
pub fn identify_limiter_hj(h: &SemigroupHandle) -> Result<f64> {
    let u0 = NodeField::canonical(
        h.grid()?,
        &h.model,
        &CanonicalDatum::new(DatumShape::PhiHat, 0.0),
    )?;
    let u = h.evolve_hj(&u0, 1.0)?;
    Ok(-u.at_junction())
}

/// `H^l(q-)` for the traces of the run started from `psi_hat_{A_max}`.
pub fn identify_limiter_cl(h: &SemigroupHandle) -> Result<LimiterEstimate> {
    let rho0 = CellField::canonical(
        h.grid()?,
        &h.model,
        &CanonicalDatum::new(DatumShape::PsiHat, h.model.a_max()),
    )?;
    let rho = h.evolve_cl(&rho0, 1.0)?;
    let traces = rho.trace_estimate(&h.model);
    let hl = h.model.left.eval(traces.q_minus)?;
    let hr = h.model.right.eval(traces.q_plus)?;
    Ok(LimiterEstimate {
        value: hl,
        traces,
        rh_gap: (hl - hr).abs(),
    })
}

/// Largest change of the trace fluxes, relative to `H^l(q_minus)`, after evolving the
/// Riemann datum `(q_minus, q_plus)` by `t`.
pub fn trace_flux_drift(h: &SemigroupHandle, q_minus: f64, q_plus: f64, t: f64) -> Result<f64> {
    let rho0 = CellField::riemann(h.grid()?, &h.model, q_minus, q_plus)?;
    let c = h.model.left.eval(rho0.values[rho0.grid.n_left() - 1])?;
    let rho = h.evolve_cl(&rho0, t)?;
    let tr = rho.trace_estimate(&h.model);
    let dl = (h.model.left.eval(tr.q_minus)? - c).abs();
    let dr = (h.model.right.eval(tr.q_plus)? - c).abs();
    Ok(dl.max(dr))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub q_minus: f64,
    pub q_plus: f64,
    pub drift: f64,
    pub stationary: bool,
    pub in_germ: bool,
}

/// Equal-flux grid pairs classified by evolution and by the germ predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GermScan {
    pub limiter: f64,
    pub threshold: f64,
    pub time: f64,
    pub entries: Vec<ScanEntry>,
}

impl GermScan {
    pub fn misclassified(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.stationary != e.in_germ)
            .count()
    }

    pub fn stationary_pairs(&self) -> Vec<TracePair> {
        self.entries
            .iter()
            .filter(|e| e.stationary)
            .map(|e| TracePair {
                q_minus: e.q_minus,
                q_plus: e.q_plus,
                flux_value: 0.0,
            })
            .collect()
    }

    /// Largest drift over germ pairs and smallest over the others.
    pub fn drift_split(&self) -> (f64, f64) {
        let mut germ = 0.0f64;
        let mut other = f64::INFINITY;
        for e in &self.entries {
            if e.in_germ {
                germ = germ.max(e.drift);
            } else {
                other = other.min(e.drift);
            }
        }
        (germ, other)
    }

    pub fn record(&self, grid_n: usize) -> CheckRecord {
        let (germ, other) = self.drift_split();
        CheckRecord::evaluate(
            "cl.germ_scan",
            self.misclassified() as f64,
            0.0,
            format!(
                "{grid_n}x{grid_n} grid, {} equal-flux pairs, limiter {:.6}, t = {}, threshold {}; \
                 max germ drift {germ:.3e}, min other drift {other:.3e}",
                self.entries.len(),
                self.limiter,
                self.time,
                self.threshold
            ),
        )
    }
}

/// Evolves every equal-flux pair of a `grid_n x grid_n` state grid to `t` and compares
/// the stationary ones with the germ of `limiter`, using `threshold` both as the drift
/// cut and as the germ tolerance.
pub fn empirical_germ_scan(
    h: &SemigroupHandle,
    grid_n: usize,
    limiter: f64,
    threshold: f64,
    t: f64,
) -> Result<GermScan> {
    let germ_model = h.model.with_limiter(limiter.clamp(0.0, h.model.a_max()))?;
    let n = grid_n.max(2);
    let (rl, rr) = (h.model.left.rmax(), h.model.right.rmax());
    let tol = h.model.flow_tol();
    let mut pairs = Vec::new();
    for i in 0..n {
        let a = rl * i as f64 / (n - 1) as f64;
        let ha = h.model.left.eval(a)?;
        for k in 0..n {
            let b = rr * k as f64 / (n - 1) as f64;
            if (ha - h.model.right.eval(b)?).abs() <= tol {
                pairs.push((a, b));
            }
        }
    }
    let entries = pairs
        .par_iter()
        .map(|&(a, b)| {
            let drift = trace_flux_drift(h, a, b, t)?;
            let in_germ = germ_model.germ_contains(&TracePair::new(&germ_model, a, b)?, threshold)?;
            Ok(ScanEntry {
                q_minus: a,
                q_plus: b,
                drift,
                stationary: drift < threshold,
                in_germ,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GermScan {
        limiter: germ_model.limiter,
        threshold,
        time: t,
        entries,
    })
}
