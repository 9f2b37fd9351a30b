//! Reduction of the path problem to a two-marginal problem.
//!
//! Because intermediate marginals are free, only the cheapest path between each
//! `(source, terminal)` pair matters. These are shortest paths in the layered
//! DAG whose nodes are `(stage, point)` and whose edges `(i, x) -> (j, y)` for
//! `i < j` cost `c_{i,j}(x, y)`; an edge that bypasses stages is a jump.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{AugIndex, Path, ProblemInstance};
use crate::path::{path_cost, paths};
use crate::tol;

/// Enumeration limit for [`brute_force_reduced_cost`].
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;
/// Saturation point when counting tied minimizers.
pub const TIE_CAP: usize = 10_000;
const EXHAUSTIVE_CONTINUATIONS: u128 = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCostTable {
    /// `values[(a, b)]` is the cheapest path cost from source `a` to terminal `b`.
    pub values: Matrix,
    argmin: Vec<Option<Path>>,
    ties: Vec<usize>,
}

impl ReducedCostTable {
    /// Deterministic minimizing path, `None` when every path is forbidden.
    pub fn argmin(&self, a: usize, b: usize) -> Option<&Path> {
        self.argmin[a * self.values.cols() + b].as_ref()
    }

    /// Number of paths within the relative tie tolerance of the minimum (saturates at [`TIE_CAP`]).
    pub fn ties(&self, a: usize, b: usize) -> usize {
        self.ties[a * self.values.cols() + b]
    }

    pub fn sources(&self) -> usize {
        self.values.rows()
    }

    pub fn terminals(&self) -> usize {
        self.values.cols()
    }
}

/// Tie-break key: fewer skips, then lower visited stages, then lower point indices.
pub fn tiebreak_key(path: &Path) -> (usize, Vec<usize>, Vec<usize>) {
    let mut stages = Vec::new();
    let mut points = Vec::new();
    for (k, c) in path.0.iter().enumerate() {
        if let AugIndex::Point(x) = c {
            stages.push(k);
            points.push(*x);
        }
    }
    (path.skip_count(), stages, points)
}

#[derive(Debug, Clone)]
struct Label {
    cost: f64,
    stages: Vec<usize>,
    points: Vec<usize>,
}

impl Label {
    fn extend(&self, leg: f64, stage: usize, point: usize) -> Label {
        let mut stages = self.stages.clone();
        let mut points = self.points.clone();
        stages.push(stage);
        points.push(point);
        Label { cost: self.cost + leg, stages, points }
    }

    // Same number of stages means same number of skips at a common node.
    fn cmp_key(&self, other: &Label) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| other.stages.len().cmp(&self.stages.len()))
            .then_with(|| self.stages.cmp(&other.stages))
            .then_with(|| self.points.cmp(&other.points))
    }

    fn into_path(self, k: usize) -> Path {
        let mut choices = vec![AugIndex::Skip; k + 1];
        for (s, x) in self.stages.into_iter().zip(self.points) {
            choices[s] = AugIndex::Point(x);
        }
        Path(choices)
    }
}

/// Stage-ordered DP from one source. `first_leg(j, y)` is the cost of jumping
/// from the source straight to `(j, y)`. Returns labels indexed `[j][y]`; entry
/// `0` is unused.
fn forward_labels(
    instance: &ProblemInstance,
    source: usize,
    first_leg: &dyn Fn(usize, usize) -> f64,
) -> Vec<Vec<Option<Label>>> {
    let k = instance.k();
    let origin = Label { cost: 0.0, stages: vec![0], points: vec![source] };
    let mut labels: Vec<Vec<Option<Label>>> = vec![Vec::new()];
    for j in 1..=k {
        let mut row = Vec::with_capacity(instance.stage_len(j));
        for y in 0..instance.stage_len(j) {
            let mut best: Option<Label> = None;
            let mut offer = |cand: Label| {
                if best.as_ref().is_none_or(|b| cand.cmp_key(b) == Ordering::Less) {
                    best = Some(cand);
                }
            };
            let lowest = if instance.allow_skips { 0 } else { j - 1 };
            for i in lowest..j {
                if i == 0 {
                    let leg = first_leg(j, y);
                    if leg != f64::INFINITY {
                        offer(origin.extend(leg, j, y));
                    }
                    continue;
                }
                for (x, prev) in labels[i].iter().enumerate() {
                    let Some(prev) = prev else { continue };
                    let leg = instance.pair_cost(i, j, x, y);
                    if leg != f64::INFINITY {
                        offer(prev.extend(leg, j, y));
                    }
                }
            }
            row.push(best);
        }
        labels.push(row);
    }
    labels
}

/// Cheapest cost from an arbitrary source to every terminal, given its first-leg costs.
pub(crate) fn min_costs_from(
    instance: &ProblemInstance,
    first_leg: &dyn Fn(usize, usize) -> f64,
) -> Vec<f64> {
    let labels = forward_labels(instance, 0, first_leg);
    labels[instance.k()]
        .iter()
        .map(|l| l.as_ref().map_or(f64::INFINITY, |l| l.cost))
        .collect()
}

/// Minimum cost from each node `(j, y)` to the terminal stage, indexed `[j][y]`.
/// With `terminal = Some(b)` only paths ending at `b` count.
fn backward_costs(instance: &ProblemInstance, terminal: Option<usize>) -> Vec<Vec<f64>> {
    let k = instance.k();
    let mut back: Vec<Vec<f64>> = (0..=k).map(|j| vec![f64::INFINITY; instance.stage_len(j)]).collect();
    for (y, v) in back[k].iter_mut().enumerate() {
        if terminal.is_none_or(|b| b == y) {
            *v = 0.0;
        }
    }
    for i in (0..k).rev() {
        for x in 0..instance.stage_len(i) {
            let mut best = f64::INFINITY;
            let highest = if instance.allow_skips { k } else { i + 1 };
            for j in i + 1..=highest {
                for y in 0..instance.stage_len(j) {
                    let rest = back[j][y];
                    if rest == f64::INFINITY {
                        continue;
                    }
                    best = best.min(instance.pair_cost(i, j, x, y) + rest);
                }
            }
            back[i][x] = best;
        }
    }
    back
}

/// Depth-first enumeration of all paths from `source` with cost `<= threshold`,
/// pruned by the backward bound. Stops after `cap` paths.
fn near_optimal_paths(
    instance: &ProblemInstance,
    source: usize,
    terminal: Option<usize>,
    back: &[Vec<f64>],
    threshold: f64,
    cap: usize,
) -> Vec<Path> {
    struct Walk<'a> {
        instance: &'a ProblemInstance,
        back: &'a [Vec<f64>],
        terminal: Option<usize>,
        threshold: f64,
        slack: f64,
        cap: usize,
        out: Vec<Path>,
        choices: Vec<AugIndex>,
    }

    impl Walk<'_> {
        fn visit(&mut self, i: usize, x: usize, prefix: f64) {
            let k = self.instance.k();
            let highest = if self.instance.allow_skips { k } else { i + 1 };
            for j in i + 1..=highest {
                for y in 0..self.instance.stage_len(j) {
                    if self.out.len() >= self.cap {
                        return;
                    }
                    if j == k && self.terminal.is_some_and(|b| b != y) {
                        continue;
                    }
                    let leg = self.instance.pair_cost(i, j, x, y);
                    if leg == f64::INFINITY {
                        continue;
                    }
                    let cost = prefix + leg;
                    if cost + self.back[j][y] > self.threshold + self.slack {
                        continue;
                    }
                    for s in i + 1..j {
                        self.choices[s] = AugIndex::Skip;
                    }
                    self.choices[j] = AugIndex::Point(y);
                    if j == k {
                        if cost <= self.threshold {
                            self.out.push(Path(self.choices.clone()));
                        }
                    } else {
                        self.visit(j, y, cost);
                    }
                }
            }
        }
    }

    let k = instance.k();
    let mut walk = Walk {
        instance,
        back,
        terminal,
        threshold,
        slack: tol::RELATIVE * threshold.abs().max(1.0),
        cap,
        out: Vec::new(),
        choices: vec![AugIndex::Skip; k + 1],
    };
    walk.choices[0] = AugIndex::Point(source);
    walk.visit(0, source, 0.0);
    let mut out = walk.out;
    out.sort_by_cached_key(tiebreak_key);
    out
}

/// Cheapest path cost for every `(source, terminal)` pair.
pub fn reduced_cost_table(instance: &ProblemInstance) -> ReducedCostTable {
    reduced_cost_table_with(instance, tol::RELATIVE)
}

pub fn reduced_cost_table_with(instance: &ProblemInstance, tie_tol: f64) -> ReducedCostTable {
    let k = instance.k();
    let (m, n) = (instance.stage_len(0), instance.stage_len(k));
    let mut values = Matrix::filled(m, n, f64::INFINITY);
    let mut argmin = vec![None; m * n];
    for a in 0..m {
        let labels = forward_labels(instance, a, &|j, y| instance.pair_cost(0, j, a, y));
        for (b, label) in labels[k].iter().enumerate() {
            if let Some(label) = label {
                values[(a, b)] = label.cost;
                argmin[a * n + b] = Some(label.clone().into_path(k));
            }
        }
    }
    let mut ties = vec![0; m * n];
    for b in 0..n {
        let back = backward_costs(instance, Some(b));
        for a in 0..m {
            let v = values[(a, b)];
            if v == f64::INFINITY {
                continue;
            }
            let thr = tol::tie_threshold(v, tie_tol);
            ties[a * n + b] = near_optimal_paths(instance, a, Some(b), &back, thr, TIE_CAP).len();
        }
    }
    ReducedCostTable { values, argmin, ties }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForce {
    pub value: f64,
    /// Every path within the relative tie tolerance of `value`, in tie-break order.
    pub minimizers: Vec<Path>,
}

/// Exhaustive oracle: enumerates every visited subset and every choice of
/// intermediate points between `a` and `b`.
pub fn brute_force_reduced_cost(instance: &ProblemInstance, a: usize, b: usize) -> Result<BruteForce> {
    let size = instance.paths_between_count();
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { size, limit: BRUTE_FORCE_LIMIT });
    }
    let scored: Vec<(f64, Path)> =
        paths(instance, Some(a), Some(b)).map(|p| (path_cost(instance, &p), p)).collect();
    let value = scored.iter().map(|(c, _)| *c).fold(f64::INFINITY, f64::min);
    let mut minimizers: Vec<Path> = if value == f64::INFINITY {
        Vec::new()
    } else {
        let thr = tol::tie_threshold(value, tol::RELATIVE);
        scored.into_iter().filter(|(c, _)| *c <= thr).map(|(_, p)| p).collect()
    };
    minimizers.sort_by_cached_key(tiebreak_key);
    Ok(BruteForce { value, minimizers })
}

/// `h[a]`: the cheapest continuation cost from each source over all terminals.
pub fn h_values(table: &ReducedCostTable) -> Vec<f64> {
    (0..table.sources())
        .map(|a| table.values.row(a).iter().copied().fold(f64::INFINITY, f64::min))
        .collect()
}

/// All paths from one source achieving `h` up to a relative tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalContinuationSet {
    pub source: usize,
    pub h: f64,
    pub paths: Vec<Path>,
}

pub fn optimal_continuations(
    instance: &ProblemInstance,
    source: usize,
    tie_tol: f64,
) -> Result<OptimalContinuationSet> {
    let h = min_costs_from(instance, &|j, y| instance.pair_cost(0, j, source, y))
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if h == f64::INFINITY {
        return Err(Error::InfiniteSource { source_index: source });
    }
    let thr = tol::tie_threshold(h, tie_tol);
    let size = instance.paths_between_count() * instance.stage_len(instance.k()) as u128;
    let paths = if size <= EXHAUSTIVE_CONTINUATIONS {
        let mut found: Vec<Path> =
            paths(instance, Some(source), None).filter(|p| path_cost(instance, p) <= thr).collect();
        found.sort_by_cached_key(tiebreak_key);
        found
    } else {
        near_optimal_paths(instance, source, None, &backward_costs(instance, None), thr, usize::MAX)
    };
    Ok(OptimalContinuationSet { source, h, paths })
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
    fn tiny_1_table() {
        let t = reduced_cost_table(&fixtures::tiny_1());
        assert!((t.values[(0, 0)] - 0.52).abs() < 1e-12);
        assert_eq!(t.argmin(0, 0), Some(&p(&[Some(0), Some(0), Some(0)])));
        assert_eq!(t.ties(0, 0), 1);
    }

    #[test]
    fn tiny_2_table_with_and_without_skips() {
        let t = reduced_cost_table(&fixtures::tiny_2());
        assert_eq!(t.values[(0, 0)], 1.0);
        assert_eq!(t.argmin(0, 0), Some(&p(&[Some(0), None, Some(0)])));

        let mut chain = fixtures::tiny_2();
        chain.allow_skips = false;
        let t = reduced_cost_table(&chain);
        assert_eq!(t.values[(0, 0)], 41.0);
        assert_eq!(t.argmin(0, 0), Some(&p(&[Some(0), Some(0), Some(0)])));
    }

    #[test]
    fn brute_force_examples() {
        let bf = brute_force_reduced_cost(&fixtures::tiny_1(), 0, 0).unwrap();
        assert!((bf.value - 0.52).abs() < 1e-12);
        assert_eq!(bf.minimizers.len(), 1);
        let bf = brute_force_reduced_cost(&fixtures::tiny_2(), 0, 0).unwrap();
        assert_eq!((bf.value, bf.minimizers.len()), (1.0, 1));
        let one = fixtures::one_leg(&[0.0, 3.0], &[1.0, 2.0]);
        let bf = brute_force_reduced_cost(&one, 1, 0).unwrap();
        assert_eq!(bf.value, 4.0);
        assert_eq!(bf.minimizers, vec![p(&[Some(1), Some(0)])]);
    }

    #[test]
    fn h_values_examples() {
        assert!((h_values(&reduced_cost_table(&fixtures::tiny_1()))[0] - 0.52).abs() < 1e-12);
        assert_eq!(h_values(&reduced_cost_table(&fixtures::tiny_2()))[0], 1.0);

        let mut inst = fixtures::mix_1().realized().unwrap();
        for m in inst.costs.matrices.iter_mut().filter(|((i, _), _)| *i == 0).map(|(_, m)| m) {
            for b in 0..m.cols() {
                m[(1, b)] = f64::INFINITY;
            }
        }
        let h = h_values(&reduced_cost_table(&inst));
        assert_eq!(h[1], f64::INFINITY);
        assert!(h[0].is_finite());
        assert_eq!(reduced_cost_table(&inst).argmin(1, 0), None);
    }

    #[test]
    fn continuation_sets() {
        let s = optimal_continuations(&fixtures::tiny_1(), 0, tol::RELATIVE).unwrap();
        assert_eq!(s.paths, vec![p(&[Some(0), Some(0), Some(0)])]);
        let s = optimal_continuations(&fixtures::tie(), 0, tol::RELATIVE).unwrap();
        assert_eq!(s.paths.len(), 2);
        assert_eq!(s.paths[0], p(&[Some(0), Some(0), Some(0)]));
        let s = optimal_continuations(&fixtures::tiny_2(), 0, tol::RELATIVE).unwrap();
        assert_eq!(s.paths, vec![p(&[Some(0), None, Some(0)])]);
    }

    #[test]
    fn tie_instance_counts_two_minimizers() {
        let t = reduced_cost_table(&fixtures::tie());
        assert_eq!(t.ties(0, 0), 2);
        // fewer skips wins the tie
        assert_eq!(t.argmin(0, 0), Some(&p(&[Some(0), Some(0), Some(0)])));
    }

    #[test]
    fn pruned_search_matches_exhaustive_continuations() {
        for seed in 0..40 {
            let spec = GeneratorSpec {
                family: Family::RandomMatrix,
                sizes: vec![2, 3, 2, 3, 2],
                seed,
                ..GeneratorSpec::default()
            };
            let inst = generate(&spec).unwrap();
            for a in 0..2 {
                let exhaustive = optimal_continuations(&inst, a, 1e-9).unwrap();
                let thr = tol::tie_threshold(exhaustive.h, 1e-9);
                let pruned = near_optimal_paths(&inst, a, None, &backward_costs(&inst, None), thr, usize::MAX);
                assert_eq!(exhaustive.paths, pruned);
                // a looser threshold agrees too
                let thr = exhaustive.h * 1.5 + 0.1;
                let mut all: Vec<Path> =
                    paths(&inst, Some(a), None).filter(|p| path_cost(&inst, p) <= thr).collect();
                all.sort_by_cached_key(tiebreak_key);
                assert_eq!(all, near_optimal_paths(&inst, a, None, &backward_costs(&inst, None), thr, usize::MAX));
            }
        }
    }

    #[test]
    fn table_matches_oracle_and_argmin_reevaluates() {
        for seed in 0..60 {
            for family in [Family::RandomMatrix, Family::Euclidean, Family::Circle] {
                let spec = GeneratorSpec { family, sizes: vec![3, 2, 3, 1, 2], seed, ..Default::default() };
                let inst = generate(&spec).unwrap();
                let t = reduced_cost_table(&inst);
                for a in 0..3 {
                    for b in 0..2 {
                        let bf = brute_force_reduced_cost(&inst, a, b).unwrap();
                        assert!((t.values[(a, b)] - bf.value).abs() <= 1e-12);
                        let arg = t.argmin(a, b).unwrap();
                        assert!((path_cost(&inst, arg) - t.values[(a, b)]).abs() <= 1e-12);
                        assert_eq!(t.ties(a, b), bf.minimizers.len());
                    }
                }
            }
        }
    }

    #[test]
    fn skips_never_increase_and_enrichment_never_increases() {
        for seed in 0..40 {
            let spec = GeneratorSpec {
                family: Family::Euclidean,
                sizes: vec![2, 2, 2, 2],
                seed,
                dimension: 2,
                ..Default::default()
            };
            let with = generate(&spec).unwrap();
            let without = ProblemInstance { allow_skips: false, ..with.clone() };
            let (tw, to) = (reduced_cost_table(&with), reduced_cost_table(&without));
            for (x, y) in tw.values.as_slice().iter().zip(to.values.as_slice()) {
                assert!(x <= y);
            }
            let mut richer = with.clone();
            if let Some(crate::model::Coords::Vectors(v)) = &mut richer.spaces[2].coords {
                v.push(vec![0.5, 0.5]);
            }
            richer.spaces[2].labels.push("extra".into());
            let tr = reduced_cost_table(&richer);
            for (x, y) in tr.values.as_slice().iter().zip(tw.values.as_slice()) {
                assert!(x <= y);
            }
        }
    }
}
