//! Executable checks of the semi-group properties against a black-box solver, limiter
//! identification and an empirical reconstruction of the germ.

mod checks;
mod handle;
mod identify;
mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checks::{
    check_check_profiles, check_comparison, check_constants, check_duality,
    check_exact_scale_invariance, check_finite_speed, check_flux_limited_profile,
    check_l1_contraction, check_linf_contraction, check_locality, check_mass,
    check_riemann_oracle, check_scale_invariance, check_supersolution,
};
pub use handle::{Equation, HandleKind, SemigroupHandle};
pub use identify::{
    empirical_germ_scan, identify_limiter_cl, identify_limiter_hj, trace_flux_drift, GermScan,
    LimiterEstimate, ScanEntry,
};
pub use report::{CheckRecord, Status, VerificationReport};

/// Every check of the battery, in report order.
pub const ALL_CHECKS: &[&str] = &[
    "cl.identify_limiter",
    "cl.l1_contraction",
    "cl.comparison",
    "cl.mass",
    "cl.finite_speed",
    "cl.locality",
    "cl.scale_invariance",
    "cl.riemann_oracle",
    "cl.germ_scan",
    "hj.identify_limiter",
    "hj.linf_contraction",
    "hj.constants",
    "hj.finite_speed",
    "hj.locality",
    "hj.scale_invariance",
    "hj.exact_scale_invariance",
    "hj.flux_limited_profile",
    "hj.check_profiles",
    "hj.supersolution",
    "duality",
    "limiter_agreement",
];

const AGREEMENT_TOL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub seed: u64,
    pub n_trials: usize,
    pub t_grid: Vec<f64>,
    pub germ_grid_n: usize,
    pub scale_eps: Vec<f64>,
    pub stationary_threshold: f64,
    pub scan_time: f64,
    /// Subset of [`ALL_CHECKS`] to run; all of them when absent.
    pub checks: Option<Vec<String>>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_trials: 100,
            t_grid: vec![0.25, 0.5, 1.0],
            germ_grid_n: 21,
            scale_eps: vec![2.0, 4.0],
            stationary_threshold: 0.005,
            scan_time: 0.5,
            checks: None,
        }
    }
}

struct Battery<'a> {
    cl: &'a SemigroupHandle,
    hj: &'a SemigroupHandle,
    cfg: &'a VerifyConfig,
    a_cl: std::result::Result<LimiterEstimate, String>,
    a_hj: std::result::Result<f64, String>,
}

impl Battery<'_> {
    fn run(&self, name: &str) -> CheckRecord {
        let cfg = self.cfg;
        let seed = cfg.seed;
        let outcome = match name {
            "cl.identify_limiter" => self.a_cl.clone().map(|e| {
                CheckRecord::evaluate(
                    name,
                    e.rh_gap,
                    cfg.stationary_threshold,
                    format!(
                        "psi_hat_A_max at t = 1: limiter {:.6}, traces ({:.6}, {:.6}), flux gap across the junction",
                        e.value, e.traces.q_minus, e.traces.q_plus
                    ),
                )
            }).map_err(Error::Precondition),
            "cl.l1_contraction" => check_l1_contraction(self.cl, cfg.n_trials, &cfg.t_grid, seed),
            "cl.comparison" => check_comparison(self.cl, cfg.n_trials, &cfg.t_grid, seed),
            "cl.mass" => check_mass(self.cl, seed),
            "cl.finite_speed" => check_finite_speed(self.cl, -1.0, 1.0, 0.5, seed),
            "cl.locality" => check_locality(self.cl, 0.5, seed),
            "cl.scale_invariance" => check_scale_invariance(self.cl, &cfg.scale_eps),
            "cl.riemann_oracle" => self
                .cl_limiter()
                .and_then(|a| check_riemann_oracle(self.cl, a)),
            "cl.germ_scan" => self.cl_limiter().and_then(|a| {
                empirical_germ_scan(
                    self.cl,
                    cfg.germ_grid_n,
                    a,
                    cfg.stationary_threshold,
                    cfg.scan_time,
                )
                .map(|s| s.record(cfg.germ_grid_n))
            }),
            "hj.identify_limiter" => self.hj_limiter().map(|a| {
                let a_max = self.hj.model.a_max();
                let outside = (-a).max(a - a_max).max(0.0);
                CheckRecord::evaluate(
                    name,
                    outside,
                    AGREEMENT_TOL,
                    format!("phi_hat_0 at t = 1: limiter {a:.6}, distance to [0, {a_max}]"),
                )
            }),
            "hj.linf_contraction" => check_linf_contraction(self.hj, cfg.n_trials, &cfg.t_grid, seed),
            "hj.constants" => check_constants(self.hj, cfg.n_trials, 0.5, seed),
            "hj.finite_speed" => check_finite_speed(self.hj, -1.0, 1.0, 0.5, seed),
            "hj.locality" => check_locality(self.hj, 0.5, seed),
            "hj.scale_invariance" => check_scale_invariance(self.hj, &cfg.scale_eps),
            "hj.exact_scale_invariance" => self.hj_limiter().and_then(|a| {
                let model = self.hj.model.with_limiter(a.clamp(0.0, self.hj.model.a_max()))?;
                check_exact_scale_invariance(&model, 100, seed)
            }),
            "hj.flux_limited_profile" => self
                .hj_limiter()
                .and_then(|a| check_flux_limited_profile(self.hj, a)),
            "hj.check_profiles" => self
                .hj_limiter()
                .and_then(|a| check_check_profiles(self.hj, a)),
            "hj.supersolution" => check_supersolution(self.hj),
            "duality" => check_duality(self.cl, self.hj),
            "limiter_agreement" => self.cl_limiter().and_then(|c| {
                let h = self.hj_limiter()?;
                Ok(CheckRecord::evaluate(
                    name,
                    (c - h).abs(),
                    AGREEMENT_TOL,
                    format!("conservation-law estimate {c:.6}, HJ estimate {h:.6}"),
                ))
            }),
            other => Err(Error::Precondition(format!("unknown check `{other}`"))),
        };
        outcome.unwrap_or_else(|e| CheckRecord::failed(name, f64::NAN, e.to_string()))
    }

    fn cl_limiter(&self) -> Result<f64> {
        self.a_cl
            .as_ref()
            .map(|e| e.value)
            .map_err(|e| Error::Precondition(format!("limiter identification failed: {e}")))
    }

    fn hj_limiter(&self) -> Result<f64> {
        self.a_hj
            .clone()
            .map_err(|e| Error::Precondition(format!("limiter identification failed: {e}")))
    }
}

/// Runs the requested checks against a conservation-law handle and an HJ handle.
pub fn run_verification(
    cl: &SemigroupHandle,
    hj: &SemigroupHandle,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    if cl.equation() != Equation::Cl || hj.equation() != Equation::Hj {
        return Err(Error::Precondition(
            "run_verification needs one conservation-law and one HJ handle".into(),
        ));
    }
    let names: Vec<String> = match &cfg.checks {
        Some(list) => {
            if let Some(bad) = list.iter().find(|n| !ALL_CHECKS.contains(&n.as_str())) {
                return Err(Error::Precondition(format!("unknown check `{bad}`")));
            }
            list.clone()
        }
        None => ALL_CHECKS.iter().map(|s| s.to_string()).collect(),
    };
    let (a_cl, a_hj) = rayon::join(|| identify_limiter_cl(cl), || identify_limiter_hj(hj));
    let battery = Battery {
        cl,
        hj,
        cfg,
        a_cl: a_cl.map_err(|e| e.to_string()),
        a_hj: a_hj.map_err(|e| e.to_string()),
    };
    let records: Vec<CheckRecord> = names.par_iter().map(|n| battery.run(n)).collect();
    let identified_limiter_cl = battery.a_cl.as_ref().ok().map(|e| e.value);
    let identified_limiter_hj = battery.a_hj.as_ref().ok().copied();
    Ok(VerificationReport {
        seed: cfg.seed,
        records,
        identified_limiter: identified_limiter_cl.or(identified_limiter_hj),
        identified_limiter_hj,
        identified_limiter_cl,
        stationary_threshold: cfg.stationary_threshold,
    })
}
