//! Exact transport by successive shortest paths with node potentials.

use alloc::vec;
use alloc::vec::Vec;

use super::{check_inputs, plan_value, Duals, PlanEntry, TransportPlan};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAX_DENOMINATOR: u64 = 1_000_000;
const FLOAT_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
    rev: usize,
}

struct Network {
    adj: Vec<Vec<Arc>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Self { adj: vec![Vec::new(); nodes] }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: f64, cost: f64) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Arc { to, cap, cost, rev: rev_from });
        self.adj[to].push(Arc { to: from, cap: 0.0, cost: -cost, rev: rev_to });
    }
}

/// Smallest `q <= max_den` with `p / q == w` exactly in `f64`, if any.
fn exact_denominator(w: f64, max_den: u64) -> Option<u64> {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut x = w;
    for _ in 0..64 {
        let whole = libm::floor(x);
        if !(0.0..1e12).contains(&whole) {
            return None;
        }
        let a = whole as u64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            return None;
        }
        if p2 as f64 / q2 as f64 == w {
            return Some(q2);
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = x - whole;
        if frac == 0.0 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Common denominator `d <= 10^6` making every weight an exact integer multiple of `1/d`.
fn integer_scale(mu: &[f64], nu: &[f64]) -> Option<u64> {
    let mut d = 1u64;
    for &w in mu.iter().chain(nu) {
        let q = exact_denominator(w, MAX_DENOMINATOR)?;
        d = d / gcd(d, q) * q;
        if d > MAX_DENOMINATOR {
            return None;
        }
    }
    let units = |m: &[f64]| m.iter().map(|w| libm::round(w * d as f64) as u64).sum::<u64>();
    (units(mu) == d && units(nu) == d).then_some(d)
}

/// Exact optimum of the transportation problem.
///
/// Forbidden (`+inf`) cells never carry mass. The returned plan is a vertex of
/// the transport polytope (its support is a forest, so at most `m + n - 1`
/// cells) and carries dual potentials that are feasible everywhere and tight on
/// the support. Weights that are exact fractions with denominator at most
/// `10^6` are routed in integer units; otherwise flow is floating point with
/// residuals below `1e-12` treated as zero.
pub fn solve_exact_transport(mu: &[f64], nu: &[f64], cost: &Matrix) -> Result<TransportPlan> {
    check_inputs(mu, nu, cost)?;
    let (m, n) = (mu.len(), nu.len());
    let (scale, eps) = match integer_scale(mu, nu) {
        Some(d) => (d as f64, 0.5),
        None => (1.0, FLOAT_EPS),
    };
    let supply: Vec<f64> = mu.iter().map(|w| if scale == 1.0 { *w } else { libm::round(w * scale) }).collect();
    let demand: Vec<f64> = nu.iter().map(|w| if scale == 1.0 { *w } else { libm::round(w * scale) }).collect();

    let (s, t) = (m + n, m + n + 1);
    let mut net = Network::new(m + n + 2);
    for (a, &w) in supply.iter().enumerate() {
        if w > eps {
            net.add_arc(s, a, w, 0.0);
        }
    }
    let mut cell_arc = vec![usize::MAX; m * n];
    for a in 0..m {
        for b in 0..n {
            let c = cost[(a, b)];
            if c != f64::INFINITY {
                cell_arc[a * n + b] = net.adj[a].len();
                net.add_arc(a, m + b, f64::INFINITY, c);
            }
        }
    }
    for (b, &w) in demand.iter().enumerate() {
        if w > eps {
            net.add_arc(m + b, t, w, 0.0);
        }
    }

    let nodes = m + n + 2;
    let mut potential = vec![0.0f64; nodes];
    let mut remaining: f64 = supply.iter().filter(|w| **w > eps).sum();
    let mut dist = vec![f64::INFINITY; nodes];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; nodes];
    let mut done = vec![false; nodes];
    while remaining > eps {
        dist.fill(f64::INFINITY);
        prev.fill(None);
        done.fill(false);
        dist[s] = 0.0;
        loop {
            let mut u = usize::MAX;
            for v in 0..nodes {
                if !done[v] && dist[v] < f64::INFINITY && (u == usize::MAX || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            for (idx, arc) in net.adj[u].iter().enumerate() {
                if arc.cap <= eps || done[arc.to] {
                    continue;
                }
                let reduced = (arc.cost + potential[u] - potential[arc.to]).max(0.0);
                let cand = dist[u] + reduced;
                if cand < dist[arc.to] {
                    dist[arc.to] = cand;
                    prev[arc.to] = Some((u, idx));
                }
            }
        }
        let reach = dist[t];
        if reach == f64::INFINITY {
            // Leftover below the normalization tolerance in floating-point mode.
            if scale == 1.0 && remaining <= 1e-9 {
                break;
            }
            return Err(Error::Infeasible);
        }
        for v in 0..nodes {
            potential[v] += dist[v].min(reach);
        }
        let mut push = remaining;
        let mut v = t;
        while let Some((u, idx)) = prev[v] {
            push = push.min(net.adj[u][idx].cap);
            v = u;
        }
        let mut v = t;
        while let Some((u, idx)) = prev[v] {
            let arc = &mut net.adj[u][idx];
            arc.cap -= push;
            let (to, rev) = (arc.to, arc.rev);
            net.adj[to][rev].cap += push;
            v = u;
        }
        remaining -= push;
    }

    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for a in 0..m {
        for b in 0..n {
            let idx = cell_arc[a * n + b];
            if idx == usize::MAX {
                continue;
            }
            let arc = &net.adj[a][idx];
            let flow = net.adj[arc.to][arc.rev].cap;
            if flow > if scale == 1.0 { 0.0 } else { eps } {
                cells.push((a, b, flow));
            }
        }
    }
    cancel_cycles(&mut cells, m, n, cost);

    let entries: Vec<PlanEntry> = cells
        .into_iter()
        .map(|(a, b, f)| PlanEntry { source: a, target: b, mass: f / scale })
        .collect();
    let value = plan_value(&entries, cost);
    let duals = Duals {
        u: (0..m).map(|a| -potential[a]).collect(),
        v: (0..n).map(|b| potential[m + b]).collect(),
    };
    Ok(TransportPlan { entries, value, duals: Some(duals) })
}

/// Pushes mass around cycles of the support until it is a forest, never
/// increasing the cost.
fn cancel_cycles(cells: &mut Vec<(usize, usize, f64)>, m: usize, n: usize, cost: &Matrix) {
    while let Some(cycle) = find_cycle(cells, m, n) {
        let cycle_cost = |sign: usize| -> f64 {
            cycle.iter().enumerate().filter(|(i, _)| i % 2 == sign).map(|(_, &e)| cost[(cells[e].0, cells[e].1)]).sum()
        };
        // Edges at even positions gain mass unless that raises the cost.
        let gain = if cycle_cost(0) <= cycle_cost(1) { 0 } else { 1 };
        let theta = cycle
            .iter()
            .enumerate()
            .filter(|(i, _)| i % 2 != gain)
            .map(|(_, &e)| cells[e].2)
            .fold(f64::INFINITY, f64::min);
        for (i, &e) in cycle.iter().enumerate() {
            if i % 2 == gain {
                cells[e].2 += theta;
            } else {
                cells[e].2 -= theta;
            }
        }
        cells.retain(|c| c.2 > 0.0);
    }
}

/// Edge ids of one cycle in the bipartite support graph, in cycle order.
fn find_cycle(cells: &[(usize, usize, f64)], m: usize, n: usize) -> Option<Vec<usize>> {
    let nodes = m + n;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
    for (e, &(a, b, _)) in cells.iter().enumerate() {
        adj[a].push((m + b, e));
        adj[m + b].push((a, e));
    }
    let mut depth = vec![usize::MAX; nodes];
    let mut parent_edge = vec![usize::MAX; nodes];
    let mut parent = vec![usize::MAX; nodes];
    for root in 0..nodes {
        if depth[root] != usize::MAX {
            continue;
        }
        depth[root] = 0;
        let mut stack = vec![(root, 0usize)];
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if *next >= adj[u].len() {
                stack.pop();
                continue;
            }
            let (w, e) = adj[u][*next];
            *next += 1;
            if e == parent_edge[u] {
                continue;
            }
            if depth[w] == usize::MAX {
                depth[w] = depth[u] + 1;
                parent[w] = u;
                parent_edge[w] = e;
                stack.push((w, 0));
            } else if depth[w] < depth[u] {
                let mut cycle = vec![e];
                let mut x = u;
                while x != w {
                    cycle.push(parent_edge[x]);
                    x = parent[x];
                }
                return Some(cycle);
            }
        }
    }
    None
}
