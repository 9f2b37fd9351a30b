//! Seeded instance generators.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{CostFamily, CostKind, DiscreteMeasure, ProblemInstance, StageSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// I.i.d. uniform `[0, cost_scale]` explicit matrices for every stage pair.
    RandomMatrix,
    /// Uniform points in the unit cube with squared Euclidean cost.
    Euclidean,
    /// Uniform angles on the unit circle with squared geodesic cost.
    Circle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub family: Family,
    /// Points per stage; `K = sizes.len() - 1`.
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub cost_scale: f64,
    pub dimension: usize,
    pub allow_skips: bool,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            family: Family::RandomMatrix,
            sizes: alloc::vec![2, 2, 2],
            seed: 0,
            cost_scale: 1.0,
            dimension: 1,
            allow_skips: true,
        }
    }
}

impl GeneratorSpec {
    pub fn k(&self) -> usize {
        self.sizes.len().saturating_sub(1)
    }
}

fn labels(stage: usize, n: usize) -> Vec<alloc::string::String> {
    (0..n).map(|i| format!("x{stage}_{i}")).collect()
}

/// Identical specs give identical instances.
pub fn generate(spec: &GeneratorSpec) -> Result<ProblemInstance> {
    if spec.sizes.len() < 2 {
        return Err(Error::InvalidArgument("need at least two stages".into()));
    }
    if let Some(k) = spec.sizes.iter().position(|&s| s == 0) {
        return Err(Error::InvalidArgument(format!("stage {k} has size 0")));
    }
    if !(spec.cost_scale >= 0.0) || !spec.cost_scale.is_finite() {
        return Err(Error::InvalidArgument("cost_scale must be finite and >= 0".into()));
    }
    if spec.family == Family::Euclidean && spec.dimension == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.k();
    let (spaces, costs) = match spec.family {
        Family::RandomMatrix => {
            let spaces: Vec<StageSpace> =
                spec.sizes.iter().enumerate().map(|(s, &n)| StageSpace::new(labels(s, n))).collect();
            let mut matrices = BTreeMap::new();
            for i in 0..k {
                for j in i + 1..=k {
                    let m = Matrix::from_fn(spec.sizes[i], spec.sizes[j], |_, _| {
                        rng.random::<f64>() * spec.cost_scale
                    });
                    matrices.insert((i, j), m);
                }
            }
            (spaces, CostFamily::explicit(matrices))
        }
        Family::Euclidean => {
            let spaces = spec
                .sizes
                .iter()
                .enumerate()
                .map(|(s, &n)| {
                    let pts = (0..n)
                        .map(|_| (0..spec.dimension).map(|_| rng.random::<f64>()).collect())
                        .collect();
                    StageSpace::with_vectors(labels(s, n), pts)
                })
                .collect();
            (spaces, CostFamily::kernel(CostKind::SquaredEuclidean))
        }
        Family::Circle => {
            let spaces = spec
                .sizes
                .iter()
                .enumerate()
                .map(|(s, &n)| {
                    let angles = (0..n).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
                    StageSpace::with_angles(labels(s, n), angles)
                })
                .collect();
            (spaces, CostFamily::kernel(CostKind::SquaredCircleGeodesic))
        }
    };
    Ok(ProblemInstance {
        spaces,
        costs,
        mu0: DiscreteMeasure::uniform(spec.sizes[0]),
        mu_k: DiscreteMeasure::uniform(spec.sizes[k]),
        allow_skips: spec.allow_skips,
    })
}
