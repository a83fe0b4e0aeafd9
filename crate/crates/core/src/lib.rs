//! Scalar conservation laws and Hamilton-Jacobi equations on a two-road junction with
//! strictly concave fluxes and a flux limiter at `x = 0`.
//!
//! The crate provides the flux models, the junction Riemann solver and germ, monotone
//! solvers for both equations, closed-form HJ solutions for the canonical data, and a
//! verifier that checks a semi-group against its defining properties and recovers the
//! limiter it realizes.

pub mod cl;
pub mod config;
pub mod error;
pub mod flux;
pub mod grid;
pub mod hj;
pub mod io;
pub mod junction;
pub mod verify;

pub use config::{parse_config, DatumSpec, Level, Scenario, ScenarioConfig};
pub use error::{Error, Result};
pub use flux::{CanonicalDatum, ConcaveFlux, DatumShape, FluxSpec};
pub use grid::{CellField, Grid, NodeField, Side};
pub use junction::{JunctionModel, TracePair};
