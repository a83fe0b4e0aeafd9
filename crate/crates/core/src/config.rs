//! Scenario files: fluxes, limiter, grid, run times and initial datum.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cl::DEFAULT_CFL;
use crate::error::{Error, Result};
use crate::flux::{CanonicalDatum, ConcaveFlux, DatumShape, FluxSpec, PEAK_TOL};
use crate::grid::{CellField, Grid, GridAdjustment, NodeField};
use crate::junction::JunctionModel;
use crate::verify::VerifyConfig;

/// A number, or `"amax"` for `A_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Level {
    Value(f64),
    Named(String),
}

impl Level {
    fn resolve(&self, a_max: f64, path: &str) -> Result<f64> {
        let v = match self {
            Level::Value(v) => *v,
            Level::Named(s) if s == "amax" => return Ok(a_max),
            Level::Named(s) => {
                return Err(Error::config(path, format!("expected a number or \"amax\", got \"{s}\"")))
            }
        };
        if !v.is_finite() || v < 0.0 || v > a_max * (1.0 + PEAK_TOL) {
            return Err(Error::config(path, format!("{v} outside [0, A_max = {a_max}]")));
        }
        Ok(v.min(a_max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    Canonical { shape: DatumShape, level: Level },
    /// Density `left` for `x < 0`, `right` for `x > 0`.
    Riemann { left: f64, right: f64 },
    /// Density `values[i]` between `breaks[i - 1]` and `breaks[i]`.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// Value function through `points`, extended by constants.
    PiecewiseLinear { points: Vec<[f64; 2]> },
}

fn greenshields_spec() -> FluxSpec {
    ConcaveFlux::greenshields().spec()
}

fn amax() -> Level {
    Level::Named("amax".into())
}

fn default_domain() -> [f64; 2] {
    [-2.0, 2.0]
}

fn default_cells() -> usize {
    800
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

fn default_t_end() -> f64 {
    1.0
}

fn default_datum() -> DatumSpec {
    DatumSpec::Canonical {
        shape: DatumShape::PsiHat,
        level: amax(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "greenshields_spec")]
    pub flux_left: FluxSpec,
    #[serde(default = "greenshields_spec")]
    pub flux_right: FluxSpec,
    #[serde(default = "amax")]
    pub limiter: Level,
    #[serde(default = "default_domain")]
    pub domain: [f64; 2],
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default = "default_datum")]
    pub datum: DatumSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub verify: VerifyConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// A validated scenario with the model and grid resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub model: JunctionModel,
    pub grid: Grid,
    /// Set when the domain ends were moved to put 0 on a cell interface.
    pub adjustment: Option<GridAdjustment>,
}

pub fn parse_config(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<Scenario> {
    let config: ScenarioConfig = serde_json::from_str(text)?;
    Scenario::new(config)
}

impl Scenario {
    pub fn new(mut config: ScenarioConfig) -> Result<Self> {
        let flux = |spec: &FluxSpec, path: &str| {
            ConcaveFlux::try_from(spec.clone()).map_err(|e| Error::config(path, e.to_string()))
        };
        let left = flux(&config.flux_left, "flux_left")?;
        let right = flux(&config.flux_right, "flux_right")?;
        let a_max = left.max_flow().min(right.max_flow());
        let limiter = config.limiter.resolve(a_max, "limiter")?;
        let model = JunctionModel::new(left, right, limiter)
            .map_err(|e| Error::config("limiter", e.to_string()))?;

        let [x_min, x_max] = config.domain;
        if !(x_min.is_finite() && x_max.is_finite() && x_min < 0.0 && x_max > 0.0) {
            return Err(Error::config("domain", format!("need x_min < 0 < x_max, got [{x_min}, {x_max}]")));
        }
        if config.cells < 8 {
            return Err(Error::config("cells", format!("need at least 8 cells, got {}", config.cells)));
        }
        let (grid, adjustment) = Grid::from_domain(x_min, x_max, config.cells)
            .map_err(|e| Error::config("domain", e.to_string()))?;
        if !(config.cfl > 0.0 && config.cfl <= 1.0) {
            return Err(Error::config("cfl", format!("must be in (0, 1], got {}", config.cfl)));
        }
        if !(config.t_end.is_finite() && config.t_end >= 0.0) {
            return Err(Error::config("t_end", format!("must be >= 0, got {}", config.t_end)));
        }
        for (i, &t) in config.snapshots.iter().enumerate() {
            if !(t >= 0.0 && t <= config.t_end) {
                return Err(Error::config(format!("snapshots[{i}]"), format!("{t} outside [0, t_end]")));
            }
        }
        validate_datum(&config.datum, &model)?;
        if let DatumSpec::Canonical { level, .. } = &mut config.datum {
            *level = Level::Value(level.resolve(a_max, "datum.level")?);
        }
        config.limiter = Level::Value(limiter);
        config.verify.seed = config.seed;
        Ok(Self {
            config,
            model,
            grid,
            adjustment,
        })
    }

    /// The datum as a density, differentiating value-function data.
    pub fn cells(&self) -> Result<CellField> {
        let j = &self.model;
        let g = self.grid;
        match &self.config.datum {
            DatumSpec::Canonical { shape, level } => {
                let datum = CanonicalDatum::new(*shape, resolved(level));
                if shape.is_density() {
                    CellField::canonical(g, j, &datum)
                } else {
                    CellField::from_slopes(&NodeField::canonical(g, j, &datum)?, j)
                }
            }
            DatumSpec::Riemann { left, right } => CellField::riemann(g, j, *left, *right),
            DatumSpec::PiecewiseConstant { breaks, values } => CellField::from_fn(g, j, |x| {
                values[breaks.partition_point(|b| *b <= x)]
            }),
            DatumSpec::PiecewiseLinear { points } => {
                CellField::from_slopes(&NodeField::from_fn(g, |x| interpolate(points, x)), j)
            }
        }
    }

    /// The datum as a value function, integrating density data with `u(0) = 0`.
    pub fn nodes(&self) -> Result<NodeField> {
        let j = &self.model;
        let g = self.grid;
        match &self.config.datum {
            DatumSpec::Canonical { shape, level } if !shape.is_density() => {
                NodeField::canonical(g, j, &CanonicalDatum::new(*shape, resolved(level)))
            }
            DatumSpec::PiecewiseLinear { points } => {
                Ok(NodeField::from_fn(g, |x| interpolate(points, x)))
            }
            _ => Ok(NodeField::integrate(&self.cells()?, 0.0)),
        }
    }
}

fn resolved(level: &Level) -> f64 {
    match level {
        Level::Value(v) => *v,
        Level::Named(_) => unreachable!("levels are resolved by Scenario::new"),
    }
}

fn interpolate(points: &[[f64; 2]], x: f64) -> f64 {
    let i = points.partition_point(|p| p[0] <= x);
    if i == 0 {
        points[0][1]
    } else if i == points.len() {
        points[i - 1][1]
    } else {
        let ([x0, y0], [x1, y1]) = (points[i - 1], points[i]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

fn in_range(v: f64, max: f64, path: &str) -> Result<()> {
    if v.is_finite() && (0.0..=max).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(path, format!("{v} outside [0, {max}]")))
    }
}

fn validate_datum(datum: &DatumSpec, j: &JunctionModel) -> Result<()> {
    let (rl, rr) = (j.left.rmax(), j.right.rmax());
    match datum {
        DatumSpec::Canonical { level, .. } => level.resolve(j.a_max(), "datum.level").map(|_| ()),
        DatumSpec::Riemann { left, right } => {
            in_range(*left, rl, "datum.left")?;
            in_range(*right, rr, "datum.right")
        }
        DatumSpec::PiecewiseConstant { breaks, values } => {
            if values.len() != breaks.len() + 1 {
                return Err(Error::config(
                    "datum.values",
                    format!("need {} values for {} breaks", breaks.len() + 1, breaks.len()),
                ));
            }
            if breaks.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(Error::config("datum.breaks", "must be strictly increasing"));
            }
            for (i, &v) in values.iter().enumerate() {
                let lo = if i == 0 { f64::NEG_INFINITY } else { breaks[i - 1] };
                let hi = breaks.get(i).copied().unwrap_or(f64::INFINITY);
                let max = match (lo < 0.0, hi > 0.0) {
                    (true, true) => rl.min(rr),
                    (true, false) => rl,
                    _ => rr,
                };
                in_range(v, max, &format!("datum.values[{i}]"))?;
            }
            Ok(())
        }
        DatumSpec::PiecewiseLinear { points } => {
            if points.is_empty() {
                return Err(Error::config("datum.points", "need at least one point"));
            }
            for (i, w) in points.windows(2).enumerate() {
                let path = format!("datum.points[{}]", i + 1);
                if !(w[0][0] < w[1][0]) {
                    return Err(Error::config(path, "x must be strictly increasing"));
                }
                let slope = (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]);
                let max = match (w[0][0] < 0.0, w[1][0] > 0.0) {
                    (true, true) => rl.min(rr),
                    (true, false) => rl,
                    _ => rr,
                };
                if !(slope.is_finite() && (0.0..=max).contains(&slope)) {
                    return Err(Error::config(path, format!("slope {slope} outside [0, {max}]")));
                }
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "flux_left": {"kind": "quadratic", "rmax": 1.0, "hmax": 0.25},
        "flux_right": {"kind": "quadratic", "rmax": 1.0, "hmax": 0.25},
        "limiter": 0.1875
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let s = parse_config_str(MINIMAL).unwrap();
        assert_eq!(s.config.cfl, 0.8);
        assert_eq!(s.config.domain, [-2.0, 2.0]);
        assert_eq!(s.config.cells, 800);
        assert_eq!(s.model.limiter, 0.1875);
        assert_eq!(s.grid.n_left(), 400);
        assert!(s.adjustment.is_none());
    }

    #[test]
    fn amax_resolves_to_min_of_peaks() {
        let s = parse_config_str(r#"{"limiter": "amax"}"#).unwrap();
        assert_eq!(s.model.limiter, 0.25);
        assert_eq!(s.config.limiter, Level::Value(0.25));
    }

    #[test]
    fn limiter_above_amax_is_a_validation_error() {
        let e = parse_config_str(r#"{"limiter": 0.3}"#).unwrap_err();
        assert!(e.is_validation());
        assert!(matches!(e, Error::Config { ref path, .. } if path == "limiter"));
    }

    #[test]
    fn field_paths_in_errors() {
        let path_of = |text: &str| match parse_config_str(text).unwrap_err() {
            Error::Config { path, .. } => path,
            other => panic!("unexpected {other}"),
        };
        assert_eq!(path_of(r#"{"cells": 4}"#), "cells");
        assert_eq!(path_of(r#"{"domain": [0.5, 2]}"#), "domain");
        assert_eq!(path_of(r#"{"snapshots": [2.0]}"#), "snapshots[0]");
        assert_eq!(
            path_of(r#"{"datum": {"kind": "riemann", "left": 1.5, "right": 0}}"#),
            "datum.left"
        );
        assert_eq!(
            path_of(r#"{"flux_left": {"kind": "quadratic", "rmax": -1, "hmax": 0.25}}"#),
            "flux_left"
        );
    }

    #[test]
    fn malformed_json_is_a_validation_error() {
        assert!(parse_config_str("{ not json").unwrap_err().is_validation());
        assert!(parse_config_str(r#"{"unknown": 1}"#).unwrap_err().is_validation());
    }

    #[test]
    fn odd_domain_is_adjusted() {
        let s = parse_config_str(r#"{"domain": [-1.0, 2.0], "cells": 10}"#).unwrap();
        let adj = s.adjustment.expect("0 does not fall on an interface");
        assert_eq!(adj.requested, [-1.0, 2.0]);
        assert!(s.grid.x_min() < 0.0 && s.grid.x_max() > 0.0);
        assert_eq!(s.grid.n_cells(), 10);
    }

    #[test]
    fn datum_conversions_agree() {
        let s = parse_config_str(
            r#"{"datum": {"kind": "canonical", "shape": "phi_hat", "level": 0.1875}}"#,
        )
        .unwrap();
        let rho = s.cells().unwrap();
        let u = s.nodes().unwrap();
        assert!((rho.values[0] - 0.75).abs() < 1e-12);
        assert!((rho.values[rho.values.len() - 1] - 0.25).abs() < 1e-12);
        let back = NodeField::integrate(&rho, 0.0);
        assert!(back.sup_distance(&u).unwrap() < 1e-12);
    }

    #[test]
    fn piecewise_constant_datum() {
        let s = parse_config_str(
            r#"{"datum": {"kind": "piecewise_constant", "breaks": [-1, 0], "values": [0.1, 0.9, 0.2]}}"#,
        )
        .unwrap();
        let rho = s.cells().unwrap();
        assert_eq!(rho.values[0], 0.1);
        assert_eq!(rho.values[s.grid.n_left() - 1], 0.9);
        assert_eq!(rho.values[s.grid.n_left()], 0.2);
    }
}
