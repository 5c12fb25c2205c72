//! Conic pseudo-Finsler metrics on single-chart manifolds.
//!
//! The crate builds metrics from Minkowski gauges, Riemannian atoms and
//! one-forms, combines them with homogeneous functions (with closed-form
//! fundamental tensors), classifies where they are strongly convex, and
//! integrates geodesics and graph separations.

pub mod error;
pub mod numkernel;
pub mod minkowski;
pub mod metrics;
pub mod combinators;
pub mod geodesy;
pub mod cli;

pub use error::{Error, ErrorKind, Result};
