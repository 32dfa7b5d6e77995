//! Boundary-driven weakly asymmetric exclusion process: lattice simulation,
//! hydrodynamic solvers and numerical evaluation of the dynamical
//! large-deviation cost of macroscopic paths.

pub mod error;
pub mod experiment;
pub mod field;
pub mod grid;
pub mod hydro;
pub mod io;
pub mod model;
pub mod quad;
pub mod micro;
pub mod rate;
pub mod smoothing;

pub use error::{Error, Result};
pub use field::{DensityField, SpaceTimePath};
pub use grid::SpaceGrid;
pub use model::{ModelParams, TransportCoeffs};
