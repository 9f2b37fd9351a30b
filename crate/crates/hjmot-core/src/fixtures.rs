//! Small hand-checkable instances on the real line with squared Euclidean cost.

use crate::model::{CostFamily, CostKind, DiscreteMeasure, ProblemInstance, StageSpace};

/// Line instance with uniform endpoint measures.
pub fn line(stages: &[&[f64]]) -> ProblemInstance {
    let first = stages[0].len();
    let last = stages[stages.len() - 1].len();
    ProblemInstance {
        spaces: stages.iter().map(|s| StageSpace::on_line(s)).collect(),
        costs: CostFamily::kernel(CostKind::SquaredEuclidean),
        mu0: DiscreteMeasure::uniform(first),
        mu_k: DiscreteMeasure::uniform(last),
        allow_skips: true,
    }
}

/// `X_0 = {0}`, `X_1 = {0.4, 10}`, `X_2 = {1}`: the optimum visits 0.4.
pub fn tiny_1() -> ProblemInstance {
    line(&[&[0.0], &[0.4, 10.0], &[1.0]])
}

/// `X_0 = {0}`, `X_1 = {5}`, `X_2 = {1}`: the optimum skips stage 1.
pub fn tiny_2() -> ProblemInstance {
    line(&[&[0.0], &[5.0], &[1.0]])
}

/// Two sources: one routes through 0.4, the other jumps straight to 11.
pub fn mix_1() -> ProblemInstance {
    line(&[&[0.0, 10.0], &[0.4], &[1.0, 11.0]])
}

/// `X_1 = {0}` with endpoints 0 and 1: direct and via-0 paths both cost 1.
pub fn tie() -> ProblemInstance {
    line(&[&[0.0], &[0.0], &[1.0]])
}

/// A single leg between two point sets on the line.
pub fn one_leg(sources: &[f64], targets: &[f64]) -> ProblemInstance {
    line(&[sources, targets])
}

