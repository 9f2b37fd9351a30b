use alloc::string::String;
use alloc::vec::Vec;

use crate::model::Path;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("stage {stage} has no coordinates for kernel cost {kind}")]
    MissingCoords { stage: usize, kind: &'static str },
    #[error("instance too large for exhaustive enumeration: {size} > {limit}")]
    TooLarge { size: u128, limit: u128 },
    #[error("transport problem is infeasible")]
    Infeasible,
    #[error("measure is not normalized (mass {mass})")]
    NotNormalized { mass: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("sinkhorn did not converge after {iterations} iterations (violation {violation:e})")]
    NotConverged { iterations: usize, violation: f64 },
    #[error("simplex iteration limit reached")]
    IterationLimit,
    #[error("source {source_index} has infinite optimal cost")]
    InfiniteSource { source_index: usize },
    #[error("marginal mismatch at stage {stage}: discrepancy {discrepancy:e}")]
    MarginalMismatch { stage: usize, discrepancy: f64 },
    #[error("mass at source {source_index} is split over {} paths", paths.len())]
    SplitMass { source_index: usize, paths: Vec<(Path, f64)> },
    #[error("monge precondition failed at stage {stage}: {detail}")]
    MongePrecondition { stage: usize, detail: String, paths: Vec<Path> },
    #[error("missing dual potentials; use the exact method")]
    MissingDuals,
    #[error("operation requires kernel costs")]
    NotKernel,
    #[error("insufficient grid: need at least two step sizes")]
    InsufficientGrid,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
