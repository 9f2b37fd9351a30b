use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CheckResult, Witness};
use crate::model::{Path, ProblemInstance};
use crate::path::path_cost;
use crate::solver::HjmotSolution;

/// Permutation tuples are enumerated exhaustively up to this count.
const TUPLE_LIMIT: u128 = 1_000_000;
/// Number of random tuples per subset beyond [`TUPLE_LIMIT`].
const SAMPLED_TUPLES: usize = 10_000;

fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(m), &mut alloc::vec![false; m], &mut out);
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    let mut r: u128 = 1;
    for i in 0..k.min(n - k) {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Checks `sum_i c(omega_i) <= sum_i c(permuted omega_i)` on subsets of the
/// support of size `min(m_max, |support|)`, where stage `k` of the permuted
/// path `i` is taken from path `sigma_k(i)`.
///
/// Subsets are enumerated when there are at most `samples` of them, otherwise
/// `samples` random subsets are drawn. Fixing `sigma_0` to the identity loses
/// nothing since relabeling the subset covers the remaining tuples. A
/// violation counts when it exceeds `tol * max(1, lhs)`.
pub fn check_cyclical_monotonicity(
    instance: &ProblemInstance,
    solution: &HjmotSolution,
    m_max: usize,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckResult {
    const NAME: &str = "cyclical";
    let support: Vec<&Path> = solution.atoms.iter().map(|a| &a.path).collect();
    let costs: Vec<f64> = support.iter().map(|p| path_cost(instance, p)).collect();
    let m = m_max.min(support.len());
    if m < 2 {
        return CheckResult::new(NAME, true, 0.0, None);
    }
    let k = instance.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subsets = if binomial(support.len(), m) <= samples as u128 {
        combinations(support.len(), m)
    } else {
        (0..samples)
            .map(|_| {
                let mut s = index::sample(&mut rng, support.len(), m).into_vec();
                s.sort_unstable();
                s
            })
            .collect()
    };
    let perms = permutations(m);
    let tuple_count = (perms.len() as u128).checked_pow(k as u32).unwrap_or(u128::MAX);

    let mut worst = f64::NEG_INFINITY;
    let mut witness = Witness::default();
    let mut tuple: Vec<usize> = alloc::vec![0; k];
    let mut evaluate = |subset: &[usize], tuple: &[usize]| {
        let lhs: f64 = subset.iter().map(|&s| costs[s]).sum();
        let rhs: f64 = (0..m)
            .map(|i| {
                let mut choices = Vec::with_capacity(k + 1);
                choices.push(support[subset[i]].0[0]);
                for (stage, &p) in tuple.iter().enumerate() {
                    choices.push(support[subset[perms[p][i]]].0[stage + 1]);
                }
                path_cost(instance, &Path(choices))
            })
            .sum();
        let d = (lhs - rhs) / lhs.abs().max(1.0);
        if d > worst {
            worst = d;
            witness.paths = subset.iter().map(|&s| support[s].clone()).collect();
            witness.permutations = core::iter::once((0..m).collect())
                .chain(tuple.iter().map(|&p| perms[p].clone()))
                .collect();
        }
    };
    for subset in &subsets {
        if tuple_count <= TUPLE_LIMIT {
            tuple.fill(0);
            loop {
                evaluate(subset, &tuple);
                let Some(pos) = (0..k).rev().find(|&i| tuple[i] + 1 < perms.len()) else {
                    break;
                };
                tuple[pos] += 1;
                tuple[pos + 1..].fill(0);
            }
        } else {
            for _ in 0..SAMPLED_TUPLES {
                for t in tuple.iter_mut() {
                    *t = rng.random_range(0..perms.len());
                }
                evaluate(subset, &tuple);
            }
        }
    }
    let pass = worst <= tol;
    if !pass {
        witness.detail = alloc::format!("permuted paths are cheaper by {worst} (relative)");
    }
    CheckResult::new(NAME, pass, worst.max(0.0), (!pass).then_some(witness))
}
