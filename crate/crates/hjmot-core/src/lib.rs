//! Discrete hierarchical jump multi-marginal optimal transport.
//!
//! Mass travels from an origin stage `0` to a terminal stage `K` through
//! intermediate stages `1..K-1`, and may skip any intermediate stage through an
//! isolated skip state. This crate solves the resulting transport problem on
//! finite instances and checks the structural facts an optimal solution must
//! satisfy (dual potentials, cyclical monotonicity, gluing, upper bounds,
//! pairwise decomposition, Monge structure).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, hashing and the
//! command line front end live in the `hjmot` crate.
//!
//! Pipeline:
//!
//! 1. [`model`] describes an instance; [`model::validate`] reports violations.
//! 2. [`reduction::reduced_cost_table`] collapses every `(source, terminal)`
//!    pair to its cheapest path by dynamic programming over the stage DAG.
//! 3. [`solver::solve_hjmot`] transports `mu0` to `muK` on the reduced cost and
//!    lifts the plan back to path atoms.
//! 4. [`certify`] and [`monge`] verify the result.
#![cfg_attr(not(test), no_std)]
// `!(x >= 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod certify;
pub mod diagnostics;
pub mod error;
pub mod fixtures;
pub mod generate;
pub mod matrix;
pub mod model;
pub mod monge;
pub mod path;
pub mod reduction;
pub mod solver;
pub mod tol;
pub mod transport;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{
    AugIndex, Coords, CostFamily, CostKind, DiscreteMeasure, Path, ProblemInstance, StageSpace,
};
pub use solver::{solve_hjmot, HjmotSolution, Method, PathAtom};
