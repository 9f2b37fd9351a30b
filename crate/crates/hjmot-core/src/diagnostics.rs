//! Finite-difference diagnostics that move the source point off the grid
//! along a geodesic while keeping the rest of the path fixed.
//!
//! On `R^d` the geodesic is `x + t v`; on the circle it is the angle `x + t v`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{circle_distance, kernel_cost, CostKind, Location, Path, ProblemInstance};
use crate::path::active_indices;
use crate::reduction::{min_costs_from, optimal_continuations};
use crate::tol;

pub const DEFAULT_T_GRID: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

/// `r(t) / t` at or below this counts as zero in the local control probe.
const ZERO_SLOPE: f64 = 1e-9;
/// Successive `r(t) / t` must shrink by at least this factor.
const DECAY_RATIO: f64 = 0.9;

/// Owned off-grid source coordinate.
#[derive(Debug, Clone, PartialEq)]
enum Moved {
    Vector(Vec<f64>),
    Angle(f64),
}

impl Moved {
    fn location(&self) -> Location<'_> {
        match self {
            Moved::Vector(v) => Location::Vector(v),
            Moved::Angle(a) => Location::Angle(*a),
        }
    }
}

fn check_kernel(instance: &ProblemInstance) -> Result<()> {
    if !instance.costs.kind.is_kernel() {
        return Err(Error::NotKernel);
    }
    if instance.spaces.iter().any(|s| s.coords.is_none()) {
        return Err(Error::MissingCoords { stage: 0, kind: instance.costs.kind.name() });
    }
    Ok(())
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.len() < 2 {
        return Err(Error::InsufficientGrid);
    }
    if t_grid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) || t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("t grid must be strictly decreasing positive reals".into()));
    }
    Ok(())
}

/// `exp_{x_a}(t v)` for source `a`.
fn moved_source(instance: &ProblemInstance, a: usize, v: &[f64], t: f64) -> Result<Moved> {
    match instance.location(0, a) {
        Some(Location::Vector(x)) => {
            if v.len() != x.len() {
                return Err(Error::InvalidArgument(alloc::format!(
                    "direction has dimension {}, points have {}",
                    v.len(),
                    x.len()
                )));
            }
            Ok(Moved::Vector(x.iter().zip(v).map(|(x, v)| x + t * v).collect()))
        }
        Some(Location::Angle(x)) => match v {
            [v] => Ok(Moved::Angle(x + t * v)),
            _ => Err(Error::InvalidArgument("circle directions are scalars".into())),
        },
        None => Err(Error::MissingCoords { stage: 0, kind: instance.costs.kind.name() }),
    }
}

/// Path cost with the first active leg starting from an off-grid source.
fn cost_from(instance: &ProblemInstance, source: &Moved, path: &Path) -> f64 {
    let active = active_indices(path).indices;
    let point = |k: usize| path.0[k].point().unwrap_or(0);
    let mut total = 0.0;
    for (n, w) in active.windows(2).enumerate() {
        let (i, j) = (w[0], w[1]);
        let leg = if n == 0 {
            let to = instance.location(j, point(j)).expect("kernel coords");
            kernel_cost(instance.costs.kind, source.location(), to)
        } else {
            instance.pair_cost(i, j, point(i), point(j))
        };
        if leg == f64::INFINITY {
            return f64::INFINITY;
        }
        total += leg;
    }
    total
}

/// `h` at an off-grid source: cheapest continuation over all grid paths.
fn h_from(instance: &ProblemInstance, source: &Moved) -> f64 {
    let kind = instance.costs.kind;
    let first_leg = |j: usize, y: usize| {
        let to = instance.location(j, y).expect("kernel coords");
        kernel_cost(kind, source.location(), to)
    };
    min_costs_from(instance, &first_leg).into_iter().fold(f64::INFINITY, f64::min)
}

fn metric_distance(from: &Moved, to: Location<'_>) -> f64 {
    match (from, to) {
        (Moved::Vector(a), Location::Vector(b)) => {
            libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
        }
        (Moved::Angle(a), Location::Angle(b)) => circle_distance(*a, b),
        _ => f64::NAN,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeEstimate {
    pub t_grid: Vec<f64>,
    /// Forward quotients `[c(exp(tv), tail) - c(path)] / t`.
    pub estimates: Vec<f64>,
    /// First-order Richardson extrapolation of the two smallest `t`.
    pub extrapolated: f64,
}

impl DerivativeEstimate {
    /// Convergence order from the errors at the two largest `t` against a
    /// reference derivative.
    pub fn observed_order(&self, reference: f64) -> f64 {
        let e0 = (self.estimates[0] - reference).abs();
        let e1 = (self.estimates[1] - reference).abs();
        if e1 == 0.0 {
            return f64::INFINITY;
        }
        libm::log(e0 / e1) / libm::log(self.t_grid[0] / self.t_grid[1])
    }
}

fn richardson(t_a: f64, e_a: f64, t_b: f64, e_b: f64) -> f64 {
    (t_a * e_b - t_b * e_a) / (t_a - t_b)
}

/// Directional derivative of the path cost in the source point along `v`.
pub fn directional_derivative(
    instance: &ProblemInstance,
    path: &Path,
    v: &[f64],
    t_grid: &[f64],
) -> Result<DerivativeEstimate> {
    check_kernel(instance)?;
    check_grid(t_grid)?;
    instance.check_path(path)?;
    let a = path.source();
    let base = cost_from(instance, &moved_source(instance, a, v, 0.0)?, path);
    let mut estimates = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let moved = moved_source(instance, a, v, t)?;
        estimates.push((cost_from(instance, &moved, path) - base) / t);
    }
    let n = t_grid.len();
    let extrapolated = richardson(t_grid[n - 2], estimates[n - 2], t_grid[n - 1], estimates[n - 1]);
    Ok(DerivativeEstimate { t_grid: t_grid.to_vec(), estimates, extrapolated })
}

/// Quotients `[c(x^n, tail) - c(path)] / d(x^n, x)` along `x^n = exp(t_n v)`.
/// Entries are NaN when the point does not move.
pub fn sequence_quotients(instance: &ProblemInstance, path: &Path, v: &[f64], t_grid: &[f64]) -> Result<Vec<f64>> {
    check_kernel(instance)?;
    check_grid(t_grid)?;
    instance.check_path(path)?;
    let a = path.source();
    let origin = instance.location(0, a).expect("kernel coords");
    let base = cost_from(instance, &moved_source(instance, a, v, 0.0)?, path);
    t_grid
        .iter()
        .map(|&t| {
            let moved = moved_source(instance, a, v, t)?;
            let d = metric_distance(&moved, origin);
            Ok((cost_from(instance, &moved, path) - base) / d)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalControlRow {
    pub t: f64,
    /// `r(t)` per continuation.
    pub r: Vec<f64>,
    /// `r(t) / t` per continuation.
    pub slope: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalControlProbe {
    pub source: usize,
    /// The optimal continuations `S(a)`.
    pub continuations: Vec<Path>,
    /// Extrapolated directional derivative of each continuation.
    pub derivatives: Vec<f64>,
    pub rows: Vec<LocalControlRow>,
    pub pass_per_continuation: Vec<bool>,
    pub pass: bool,
}

/// Tabulates `r(t) = c(exp(tv), tail) - h(exp(tv))` for every optimal
/// continuation of source `a`. A continuation passes when `r(t) / t` is zero
/// or shrinks by a factor below 0.9 between successive grid points.
pub fn local_control_probe(
    instance: &ProblemInstance,
    a: usize,
    v: &[f64],
    t_grid: &[f64],
) -> Result<LocalControlProbe> {
    check_kernel(instance)?;
    check_grid(t_grid)?;
    if a >= instance.stage_len(0) {
        return Err(Error::InvalidArgument(alloc::format!("source {a} out of range")));
    }
    let continuations = optimal_continuations(instance, a, tol::RELATIVE)?.paths;
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let moved = moved_source(instance, a, v, t)?;
        let h = h_from(instance, &moved);
        let r: Vec<f64> = continuations.iter().map(|p| cost_from(instance, &moved, p) - h).collect();
        let slope = r.iter().map(|r| r / t).collect();
        rows.push(LocalControlRow { t, r, slope });
    }
    let pass_per_continuation: Vec<bool> = (0..continuations.len())
        .map(|i| {
            rows.windows(2).all(|w| {
                let (prev, next) = (w[0].slope[i], w[1].slope[i]);
                next.abs() <= ZERO_SLOPE || next < DECAY_RATIO * prev
            })
        })
        .collect();
    let derivatives = continuations
        .iter()
        .map(|p| directional_derivative(instance, p, v, t_grid).map(|d| d.extrapolated))
        .collect::<Result<Vec<_>>>()?;
    let pass = pass_per_continuation.iter().all(|&p| p);
    Ok(LocalControlProbe { source: a, continuations, derivatives, rows, pass_per_continuation, pass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistProbe {
    pub derivatives: Vec<(Path, f64)>,
    /// All pairwise `|D_i - D_j| > tol`.
    pub injective: bool,
}

/// Derivative of every optimal continuation of source `a` along `v`, on the
/// default grid.
pub fn twist_probe(instance: &ProblemInstance, a: usize, v: &[f64], tol: f64) -> Result<TwistProbe> {
    check_kernel(instance)?;
    let continuations = optimal_continuations(instance, a, tol::RELATIVE)?.paths;
    let mut derivatives = Vec::with_capacity(continuations.len());
    for p in continuations {
        let d = directional_derivative(instance, &p, v, &DEFAULT_T_GRID)?.extrapolated;
        derivatives.push((p, d));
    }
    let injective = derivatives
        .iter()
        .enumerate()
        .all(|(i, (_, di))| derivatives[i + 1..].iter().all(|(_, dj)| (di - dj).abs() > tol));
    Ok(TwistProbe { derivatives, injective })
}

/// Closed-form directional derivative of a kernel path cost in its source,
/// used as an independent reference in tests.
pub fn analytic_derivative(instance: &ProblemInstance, path: &Path, v: &[f64]) -> Result<f64> {
    check_kernel(instance)?;
    let active = active_indices(path).indices;
    let Some(&j) = active.get(1) else {
        return Ok(0.0);
    };
    let from = instance.location(0, path.source()).expect("kernel coords");
    let to = instance.location(j, path.0[j].point().unwrap_or(0)).expect("kernel coords");
    match (instance.costs.kind, from, to) {
        (CostKind::SquaredEuclidean, Location::Vector(x), Location::Vector(y)) => {
            Ok(x.iter().zip(y).zip(v).map(|((x, y), v)| 2.0 * (x - y) * v).sum())
        }
        (CostKind::Euclidean, Location::Vector(x), Location::Vector(y)) => {
            let n = libm::sqrt(x.iter().zip(y).map(|(x, y)| (x - y) * (x - y)).sum());
            if n == 0.0 {
                return Ok(libm::sqrt(v.iter().map(|v| v * v).sum()));
            }
            Ok(x.iter().zip(y).zip(v).map(|((x, y), v)| (x - y) * v).sum::<f64>() / n)
        }
        (CostKind::SquaredCircleGeodesic, Location::Angle(x), Location::Angle(y)) => {
            let d = circle_distance(x, y);
            // Signed direction of x away from y along the shorter arc.
            let raw = libm::fmod(x - y, 2.0 * core::f64::consts::PI);
            let wrapped = if raw > core::f64::consts::PI {
                raw - 2.0 * core::f64::consts::PI
            } else if raw < -core::f64::consts::PI {
                raw + 2.0 * core::f64::consts::PI
            } else {
                raw
            };
            let sign = if wrapped >= 0.0 { 1.0 } else { -1.0 };
            Ok(2.0 * d * sign * v.first().copied().unwrap_or(0.0))
        }
        _ => Err(Error::NotKernel),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{CostFamily, DiscreteMeasure, StageSpace};

    fn p(c: &[Option<usize>]) -> Path {
        Path::from_options(c)
    }

    #[test]
    fn derivative_examples() {
        let inst = fixtures::tiny_1();
        let d = directional_derivative(&inst, &p(&[Some(0), Some(0), Some(0)]), &[1.0], &DEFAULT_T_GRID).unwrap();
        assert!((d.extrapolated + 0.8).abs() < 1e-8, "{d:?}");
        for (t, e) in d.t_grid.iter().zip(&d.estimates) {
            assert!((e + 0.8).abs() <= 1.0001 * t + 1e-9);
        }
        let d = directional_derivative(&inst, &p(&[Some(0), None, Some(0)]), &[1.0], &DEFAULT_T_GRID).unwrap();
        assert!((d.extrapolated + 2.0).abs() < 1e-8);
        let d = directional_derivative(&inst, &p(&[Some(0), None, Some(0)]), &[0.0], &DEFAULT_T_GRID).unwrap();
        assert!(d.estimates.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn grid_and_kernel_errors() {
        let inst = fixtures::tiny_1();
        let path = p(&[Some(0), Some(0), Some(0)]);
        assert!(matches!(directional_derivative(&inst, &path, &[1.0], &[1e-2]), Err(Error::InsufficientGrid)));
        assert!(matches!(local_control_probe(&inst, 0, &[1.0], &[1e-2]), Err(Error::InsufficientGrid)));
        let explicit = inst.realized().unwrap();
        assert!(matches!(
            directional_derivative(&explicit, &path, &[1.0], &DEFAULT_T_GRID),
            Err(Error::NotKernel)
        ));
    }

    #[test]
    fn local_control_on_tiny_1() {
        let probe = local_control_probe(&fixtures::tiny_1(), 0, &[1.0], &[1e-2, 1e-3, 1e-4]).unwrap();
        assert_eq!(probe.continuations.len(), 1);
        assert!(probe.rows.iter().all(|r| r.r[0] == 0.0));
        assert!(probe.pass);
    }

    #[test]
    fn local_control_at_a_tie() {
        // Both continuations cost 1 at the source. Moving right, the direct
        // path (slope -2) wins and the via-0 path (slope 0) falls behind by 2t.
        let probe = local_control_probe(&fixtures::tie(), 0, &[1.0], &[1e-2, 1e-3, 1e-4]).unwrap();
        assert_eq!(probe.continuations.len(), 2);
        let mut ds = probe.derivatives.clone();
        ds.sort_by(f64::total_cmp);
        assert!((ds[0] + 2.0).abs() < 1e-8 && ds[1].abs() < 1e-8, "{ds:?}");
        assert!(probe.rows.iter().any(|r| r.r.iter().any(|x| *x > 0.0)));
        assert!(!probe.pass);
    }

    #[test]
    fn twist_probe_examples() {
        let t = twist_probe(&fixtures::tiny_1(), 0, &[1.0], 1e-6).unwrap();
        assert_eq!(t.derivatives.len(), 1);
        assert!(t.injective);
        let t = twist_probe(&fixtures::tie(), 0, &[1.0], 1e-6).unwrap();
        assert_eq!(t.derivatives.len(), 2);
        assert!(t.injective);
        // Two intermediate points mirrored about the direction of motion give
        // equal quotients.
        let label = |s: &str| alloc::vec![alloc::string::String::from(s)];
        let sym = ProblemInstance {
            spaces: alloc::vec![
                StageSpace::with_vectors(label("o"), alloc::vec![alloc::vec![0.0, 0.0]]),
                StageSpace::with_vectors(
                    alloc::vec!["up".into(), "down".into()],
                    alloc::vec![alloc::vec![1.0, 1.0], alloc::vec![1.0, -1.0]],
                ),
                StageSpace::with_vectors(label("e"), alloc::vec![alloc::vec![2.0, 0.0]]),
            ],
            costs: CostFamily::kernel(CostKind::SquaredEuclidean),
            mu0: DiscreteMeasure::uniform(1),
            mu_k: DiscreteMeasure::uniform(1),
            allow_skips: false,
        };
        let t = twist_probe(&sym, 0, &[1.0, 0.0], 1e-6).unwrap();
        assert_eq!(t.derivatives.len(), 2);
        assert!((t.derivatives[0].1 + 2.0).abs() < 1e-8);
        assert!(!t.injective);
    }

    #[test]
    fn sequence_quotient_scaling() {
        let inst = fixtures::tiny_1();
        let path = p(&[Some(0), Some(0), Some(0)]);
        for norm in [0.5, 1.0, 2.0] {
            let geo = directional_derivative(&inst, &path, &[norm], &DEFAULT_T_GRID).unwrap();
            let seq = sequence_quotients(&inst, &path, &[norm], &DEFAULT_T_GRID).unwrap();
            for (g, s) in geo.estimates.iter().zip(&seq) {
                assert!((g / norm - s).abs() < 1e-9);
            }
        }
    }
}
