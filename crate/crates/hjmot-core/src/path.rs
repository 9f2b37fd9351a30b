//! Path-level cost layer: active stages, extraction, path cost and the
//! maximum adjacent cost used for upper bounds.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::matrix::Matrix;
use crate::model::{AugIndex, Path, ProblemInstance};
use crate::tol;

/// Stages a path actually visits; always starts at `0` and ends at `K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveIndices {
    pub indices: Vec<usize>,
}

impl ActiveIndices {
    /// Number of visited stages.
    pub fn n(&self) -> usize {
        self.indices.len()
    }
}

pub fn active_indices(path: &Path) -> ActiveIndices {
    let indices = path
        .0
        .iter()
        .enumerate()
        .filter_map(|(k, c)| c.point().map(|_| k))
        .collect();
    ActiveIndices { indices }
}

/// `(stage, point)` pairs at the active stages, in stage order.
pub fn extract(path: &Path) -> Vec<(usize, usize)> {
    path.0.iter().enumerate().filter_map(|(k, c)| c.point().map(|x| (k, x))).collect()
}

/// Sum of pairwise costs over consecutive active stages, added left to right.
/// Any forbidden leg makes the whole path `+inf`.
pub fn path_cost(instance: &ProblemInstance, path: &Path) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<(usize, usize)> = None;
    for (k, c) in path.0.iter().enumerate() {
        let AugIndex::Point(x) = *c else { continue };
        if let Some((i, a)) = prev {
            let leg = instance.pair_cost(i, k, a, x);
            if leg == f64::INFINITY {
                return f64::INFINITY;
            }
            total += leg;
        }
        prev = Some((k, x));
    }
    total
}

/// Maximum adjacent cost between stage `i` and `i + 1`.
///
/// Point to point is the plain pairwise cost; point to skip is the largest cost
/// from the point to any point of any stage after `i + 1`; everything else is 0.
pub fn max_adjacent_cost(instance: &ProblemInstance, i: usize, a: AugIndex, b: AugIndex) -> f64 {
    match (a, b) {
        (AugIndex::Point(x), AugIndex::Point(y)) => instance.pair_cost(i, i + 1, x, y),
        (AugIndex::Point(x), AugIndex::Skip) => {
            let mut sup = 0.0f64;
            for j in i + 2..=instance.k() {
                for y in 0..instance.stage_len(j) {
                    sup = sup.max(instance.pair_cost(i, j, x, y));
                }
            }
            sup
        }
        _ => 0.0,
    }
}

/// Maximum adjacent costs as a matrix over the augmented stages `i` and `i + 1`.
pub fn max_adjacent_matrix(instance: &ProblemInstance, i: usize) -> Matrix {
    Matrix::from_fn(instance.aug_len(i), instance.aug_len(i + 1), |a, b| {
        max_adjacent_cost(instance, i, instance.aug_state(i, a), instance.aug_state(i + 1, b))
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainBound {
    pub cost: f64,
    pub tilde_sum: f64,
    pub holds: bool,
}

/// Compares a path's cost with the sum of its maximum adjacent costs.
pub fn chain_bound(instance: &ProblemInstance, path: &Path) -> ChainBound {
    let cost = path_cost(instance, path);
    let tilde_sum: f64 = (0..instance.k())
        .map(|i| max_adjacent_cost(instance, i, path.0[i], path.0[i + 1]))
        .sum();
    ChainBound { cost, tilde_sum, holds: tol::leq(cost, tilde_sum) }
}

/// Odometer over paths, optionally pinning the source and/or terminal.
pub struct Paths {
    options: Vec<Vec<AugIndex>>,
    counters: Vec<usize>,
    done: bool,
}

impl Iterator for Paths {
    type Item = Path;

    fn next(&mut self) -> Option<Path> {
        if self.done {
            return None;
        }
        let path = Path(self.counters.iter().zip(&self.options).map(|(&c, o)| o[c]).collect());
        self.done = true;
        for k in (0..self.counters.len()).rev() {
            self.counters[k] += 1;
            if self.counters[k] < self.options[k].len() {
                self.done = false;
                break;
            }
            self.counters[k] = 0;
        }
        Some(path)
    }
}

pub fn paths(instance: &ProblemInstance, source: Option<usize>, terminal: Option<usize>) -> Paths {
    let k = instance.k();
    let options: Vec<Vec<AugIndex>> = (0..=k)
        .map(|stage| match (stage, source, terminal) {
            (0, Some(a), _) => vec![AugIndex::Point(a)],
            (s, _, Some(b)) if s == k => vec![AugIndex::Point(b)],
            _ => instance.stage_choices(stage).collect(),
        })
        .collect();
    let done = options.iter().any(Vec::is_empty);
    Paths { counters: vec![0; options.len()], options, done }
}

/// Uniformly random path over the allowed choices of every stage.
pub fn random_path<R: Rng + ?Sized>(instance: &ProblemInstance, rng: &mut R) -> Path {
    Path(
        (0..=instance.k())
            .map(|k| {
                let n = instance.stage_choices(k).count();
                instance.stage_choices(k).nth(rng.random_range(0..n)).unwrap()
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::generate::{generate, Family, GeneratorSpec};

    fn p(c: &[Option<usize>]) -> Path {
        Path::from_options(c)
    }

    #[test]
    fn active_indices_examples() {
        assert_eq!(active_indices(&p(&[Some(0), None, Some(0)])).indices, vec![0, 2]);
        assert_eq!(active_indices(&p(&[Some(0), Some(0), Some(0)])).n(), 3);
        let five = p(&[Some(0), None, Some(0), None, Some(0)]);
        assert_eq!(active_indices(&five).indices, vec![0, 2, 4]);
        assert_eq!(active_indices(&five).n(), 3);
    }

    #[test]
    fn extract_examples() {
        assert_eq!(extract(&p(&[Some(0), None, Some(0)])), vec![(0, 0), (2, 0)]);
        assert_eq!(extract(&p(&[Some(0), Some(1), Some(0)])), vec![(0, 0), (1, 1), (2, 0)]);
        assert_eq!(extract(&p(&[Some(0), None, None, Some(0)])), vec![(0, 0), (3, 0)]);
    }

    #[test]
    fn tiny_path_costs() {
        let inst = fixtures::tiny_1();
        assert_eq!(path_cost(&inst, &p(&[Some(0), None, Some(0)])), 1.0);
        assert!((path_cost(&inst, &p(&[Some(0), Some(0), Some(0)])) - 0.52).abs() < 1e-12);
        assert_eq!(path_cost(&inst, &p(&[Some(0), Some(1), Some(0)])), 181.0);
    }

    #[test]
    fn forbidden_leg_is_infinite() {
        let mut inst = fixtures::tiny_1().realized().unwrap();
        inst.costs.matrices.get_mut(&(1, 2)).unwrap()[(0, 0)] = f64::INFINITY;
        assert_eq!(path_cost(&inst, &p(&[Some(0), Some(0), Some(0)])), f64::INFINITY);
        assert_eq!(path_cost(&inst, &p(&[Some(0), None, Some(0)])), 1.0);
    }

    #[test]
    fn tiny_max_adjacent_costs() {
        let inst = fixtures::tiny_1();
        let (pt, sk) = (AugIndex::Point, AugIndex::Skip);
        assert_eq!(max_adjacent_cost(&inst, 0, pt(0), sk), 1.0);
        assert!((max_adjacent_cost(&inst, 0, pt(0), pt(0)) - 0.16).abs() < 1e-15);
        assert_eq!(max_adjacent_cost(&inst, 1, sk, pt(0)), 0.0);
    }

    #[test]
    fn tiny_chain_bounds() {
        let inst = fixtures::tiny_1();
        let b = chain_bound(&inst, &p(&[Some(0), None, Some(0)]));
        assert_eq!((b.cost, b.tilde_sum, b.holds), (1.0, 1.0, true));
        let b = chain_bound(&inst, &p(&[Some(0), Some(0), Some(0)]));
        assert!((b.cost - 0.52).abs() < 1e-12 && (b.tilde_sum - 0.52).abs() < 1e-12 && b.holds);
        let b = chain_bound(&inst, &p(&[Some(0), Some(1), Some(0)]));
        assert_eq!((b.cost, b.tilde_sum, b.holds), (181.0, 181.0, true));
    }

    #[test]
    fn enumeration_counts() {
        let inst = fixtures::tiny_1();
        assert_eq!(paths(&inst, None, None).count(), 3);
        let mix = fixtures::mix_1();
        assert_eq!(paths(&mix, None, None).count() as u128, mix.path_space_size());
        assert_eq!(paths(&mix, Some(1), Some(0)).count(), 2);
    }

    #[test]
    fn chain_bound_and_indices_hold_on_every_path() {
        for seed in 0..30 {
            for family in [Family::RandomMatrix, Family::Euclidean, Family::Circle] {
                let spec = GeneratorSpec {
                    family,
                    sizes: vec![2, 3, 1, 2, 2],
                    seed,
                    ..GeneratorSpec::default()
                };
                let inst = generate(&spec).unwrap();
                for path in paths(&inst, None, None) {
                    assert!(chain_bound(&inst, &path).holds, "{path}");
                    let idx = active_indices(&path).indices;
                    assert!(idx.windows(2).all(|w| w[0] < w[1]));
                    assert_eq!((idx[0], *idx.last().unwrap()), (0, inst.k()));
                }
            }
        }
    }

    #[test]
    fn without_skips_cost_is_the_chain_sum() {
        for seed in 0..20 {
            let spec = GeneratorSpec {
                family: Family::RandomMatrix,
                sizes: vec![2, 3, 2, 2],
                seed,
                allow_skips: false,
                ..GeneratorSpec::default()
            };
            let inst = generate(&spec).unwrap();
            for path in paths(&inst, None, None) {
                assert_eq!(path.skip_count(), 0);
                let mut chain = 0.0;
                for i in 0..inst.k() {
                    chain += inst.pair_cost(i, i + 1, path.0[i].point().unwrap(), path.0[i + 1].point().unwrap());
                }
                assert_eq!(path_cost(&inst, &path), chain);
            }
        }
    }
}
