//! Point-source Helmholtz solvers built on travel time and amplitude.
//!
//! The wavefield is written as `u = a * exp(-i omega tau)`. The travel time
//! `tau` comes from a factored eikonal solve and the amplitude `a` from an
//! advection-diffusion-reaction (ADR) equation, which is far smoother than `u`
//! and therefore friendlier to multigrid.

pub mod eikonal;
pub mod error;
pub mod grid;
pub mod io;
pub mod krylov;
pub mod metrics;
pub mod model;
pub mod multigrid;
pub mod operators;
pub mod solvers;
pub mod sparse;

pub use error::{Error, Result};
pub use grid::{ComplexField, Field, GridSpec, RealField, Side};
pub use model::{Medium, ModelKind, SourceSpec};
