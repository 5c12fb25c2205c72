//! Curves, geodesics and the Finslerian separation.

mod curves;
mod separation;
mod shooting;

pub use curves::{curve_length, energy, Curve};
pub use separation::{
    build_separation_graph, df_ball, reachability, separation, GridBox, SeparationGraph,
    SeparationResult,
};
pub use shooting::{
    exp_map, gauss_lemma_residual, geodesic_shoot, radial_minimality_test, GeodesicState,
    RadialReport,
};

pub use crate::minkowski::BallDirection;
