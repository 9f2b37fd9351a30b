//! Problem instances: stage spaces, skip augmentation, costs and measures.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tol;

/// A state of an augmented stage: a point of the stage or its skip state.
///
/// The skip state only exists on intermediate stages `1..K-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AugIndex {
    Point(usize),
    Skip,
}

impl AugIndex {
    pub fn point(self) -> Option<usize> {
        match self {
            AugIndex::Point(i) => Some(i),
            AugIndex::Skip => None,
        }
    }

    pub fn is_skip(self) -> bool {
        self == AugIndex::Skip
    }
}

impl fmt::Display for AugIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AugIndex::Point(i) => write!(f, "{i}"),
            AugIndex::Skip => f.write_str("skip"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coords {
    /// One real vector per point, all of the same dimension.
    Vectors(Vec<Vec<f64>>),
    /// One angle (radians) per point on the unit circle.
    Angles(Vec<f64>),
}

impl Coords {
    fn len(&self) -> usize {
        match self {
            Coords::Vectors(v) => v.len(),
            Coords::Angles(a) => a.len(),
        }
    }

    pub fn location(&self, i: usize) -> Location<'_> {
        match self {
            Coords::Vectors(v) => Location::Vector(&v[i]),
            Coords::Angles(a) => Location::Angle(a[i]),
        }
    }
}

/// A single coordinate, borrowed from a stage or built off-grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location<'a> {
    Vector(&'a [f64]),
    Angle(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageSpace {
    pub labels: Vec<String>,
    pub coords: Option<Coords>,
}

impl StageSpace {
    pub fn new(labels: Vec<String>) -> Self {
        Self { labels, coords: None }
    }

    /// Points on the real line, labelled by their coordinate.
    pub fn on_line(xs: &[f64]) -> Self {
        Self {
            labels: xs.iter().map(|x| format!("{x}")).collect(),
            coords: Some(Coords::Vectors(xs.iter().map(|&x| alloc::vec![x]).collect())),
        }
    }

    pub fn with_vectors(labels: Vec<String>, vectors: Vec<Vec<f64>>) -> Self {
        Self { labels, coords: Some(Coords::Vectors(vectors)) }
    }

    pub fn with_angles(labels: Vec<String>, angles: Vec<f64>) -> Self {
        Self { labels, coords: Some(Coords::Angles(angles)) }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostKind {
    ExplicitMatrices,
    SquaredEuclidean,
    Euclidean,
    SquaredCircleGeodesic,
}

impl CostKind {
    pub const ALL: [CostKind; 4] = [
        CostKind::ExplicitMatrices,
        CostKind::SquaredEuclidean,
        CostKind::Euclidean,
        CostKind::SquaredCircleGeodesic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CostKind::ExplicitMatrices => "ExplicitMatrices",
            CostKind::SquaredEuclidean => "SquaredEuclidean",
            CostKind::Euclidean => "Euclidean",
            CostKind::SquaredCircleGeodesic => "SquaredCircleGeodesic",
        }
    }

    pub fn is_kernel(self) -> bool {
        self != CostKind::ExplicitMatrices
    }
}

/// Pairwise costs `c_{i,j}` for every ordered pair of stages `i < j`.
///
/// Explicit matrices are keyed by `(i, j)`; `+inf` entries forbid a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFamily {
    pub kind: CostKind,
    pub matrices: BTreeMap<(usize, usize), Matrix>,
}

impl CostFamily {
    pub fn kernel(kind: CostKind) -> Self {
        Self { kind, matrices: BTreeMap::new() }
    }

    pub fn explicit(matrices: BTreeMap<(usize, usize), Matrix>) -> Self {
        Self { kind: CostKind::ExplicitMatrices, matrices }
    }
}

/// Atomic probability measure over a stage's augmented index set.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    pub weights: Vec<f64>,
    /// Mass on the skip state; always zero on the origin and terminal stages.
    pub skip: f64,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights, skip: 0.0 }
    }

    pub fn uniform(n: usize) -> Self {
        Self::new(alloc::vec![1.0 / n as f64; n])
    }

    pub fn dirac(n: usize, at: AugIndex) -> Self {
        let mut m = Self::new(alloc::vec![0.0; n]);
        match at {
            AugIndex::Point(i) => m.weights[i] = 1.0,
            AugIndex::Skip => m.skip = 1.0,
        }
        m
    }

    /// Builds a measure from an augmented vector whose last entry is the skip mass.
    pub fn from_augmented(mut augmented: Vec<f64>) -> Self {
        let skip = augmented.pop().unwrap_or(0.0);
        Self { weights: augmented, skip }
    }

    pub fn mass(&self, at: AugIndex) -> f64 {
        match at {
            AugIndex::Point(i) => self.weights[i],
            AugIndex::Skip => self.skip,
        }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.skip
    }

    /// Weights followed by the skip mass.
    pub fn augmented(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.push(self.skip);
        v
    }

    pub fn in_support(&self, at: AugIndex) -> bool {
        self.mass(at) >= tol::SUPPORT
    }
}

/// One path `(x_0, x_1, ..., x_K)` through the augmented stages.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(pub Vec<AugIndex>);

impl Path {
    pub fn new(choices: Vec<AugIndex>) -> Self {
        Self(choices)
    }

    /// Shorthand: `None` is a skip, `Some(i)` is point `i`.
    pub fn from_options(choices: &[Option<usize>]) -> Self {
        Self(choices.iter().map(|c| c.map_or(AugIndex::Skip, AugIndex::Point)).collect())
    }

    pub fn choices(&self) -> &[AugIndex] {
        &self.0
    }

    pub fn source(&self) -> usize {
        self.0[0].point().expect("path source is a point")
    }

    pub fn terminal(&self) -> usize {
        self.0.last().and_then(|c| c.point()).expect("path terminal is a point")
    }

    pub fn skip_count(&self) -> usize {
        self.0.iter().filter(|c| c.is_skip()).count()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub spaces: Vec<StageSpace>,
    pub costs: CostFamily,
    pub mu0: DiscreteMeasure,
    pub mu_k: DiscreteMeasure,
    /// `false` forbids skip states and reproduces classical multi-marginal transport.
    pub allow_skips: bool,
}

impl ProblemInstance {
    /// Number of transport legs `K`; stages are `0..=K`.
    pub fn k(&self) -> usize {
        self.spaces.len().saturating_sub(1)
    }

    pub fn stage_len(&self, k: usize) -> usize {
        self.spaces[k].len()
    }

    pub fn is_intermediate(&self, k: usize) -> bool {
        k > 0 && k < self.k()
    }

    /// Size of the augmented index set of stage `k` (points plus skip on intermediates).
    pub fn aug_len(&self, k: usize) -> usize {
        self.stage_len(k) + usize::from(self.is_intermediate(k))
    }

    /// Position of an augmented state in `0..aug_len(k)`; the skip state is last.
    pub fn aug_position(&self, k: usize, at: AugIndex) -> usize {
        match at {
            AugIndex::Point(i) => i,
            AugIndex::Skip => self.stage_len(k),
        }
    }

    pub fn aug_state(&self, k: usize, position: usize) -> AugIndex {
        if self.is_intermediate(k) && position == self.stage_len(k) {
            AugIndex::Skip
        } else {
            AugIndex::Point(position)
        }
    }

    /// Choices a path may take at stage `k`, points first.
    pub fn stage_choices(&self, k: usize) -> impl Iterator<Item = AugIndex> + '_ {
        let skip = self.allow_skips && self.is_intermediate(k);
        (0..self.stage_len(k)).map(AugIndex::Point).chain(skip.then_some(AugIndex::Skip))
    }

    /// Number of paths in the path space.
    pub fn path_space_size(&self) -> u128 {
        (0..=self.k()).map(|k| self.stage_choices(k).count() as u128).product()
    }

    /// Number of paths with fixed endpoints.
    pub fn paths_between_count(&self) -> u128 {
        (1..self.k()).map(|k| self.stage_choices(k).count() as u128).product()
    }

    /// Endpoint measure of stage `k` for `k` in `{0, K}`.
    pub fn endpoint_measure(&self, k: usize) -> &DiscreteMeasure {
        if k == 0 {
            &self.mu0
        } else {
            &self.mu_k
        }
    }

    /// `c_{i,j}(a, b)` for `i < j`.
    pub fn pair_cost(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        debug_assert!(i < j);
        match self.costs.kind {
            CostKind::ExplicitMatrices => self.costs.matrices[&(i, j)][(a, b)],
            kind => {
                let from = self.location(i, a).expect("validated kernel coords");
                let to = self.location(j, b).expect("validated kernel coords");
                kernel_cost(kind, from, to)
            }
        }
    }

    pub fn location(&self, k: usize, i: usize) -> Option<Location<'_>> {
        self.spaces[k].coords.as_ref().map(|c| c.location(i))
    }

    pub fn check_path(&self, path: &Path) -> Result<()> {
        let k = self.k();
        if path.0.len() != k + 1 {
            return Err(Error::InvalidArgument(format!(
                "path has {} entries, expected {}",
                path.0.len(),
                k + 1
            )));
        }
        for (stage, &c) in path.0.iter().enumerate() {
            match c {
                AugIndex::Point(i) if i >= self.stage_len(stage) => {
                    return Err(Error::InvalidArgument(format!(
                        "point {i} out of range at stage {stage}"
                    )));
                }
                AugIndex::Skip if !self.is_intermediate(stage) => {
                    return Err(Error::InvalidArgument(format!(
                        "skip at endpoint stage {stage}"
                    )));
                }
                AugIndex::Skip if !self.allow_skips => {
                    return Err(Error::InvalidArgument(String::from(
                        "skip in an instance without skips",
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Cost between two coordinates under a kernel cost kind.
pub fn kernel_cost(kind: CostKind, from: Location<'_>, to: Location<'_>) -> f64 {
    match (kind, from, to) {
        (CostKind::SquaredEuclidean, Location::Vector(a), Location::Vector(b)) => {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
        }
        (CostKind::Euclidean, Location::Vector(a), Location::Vector(b)) => {
            libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
        }
        (CostKind::SquaredCircleGeodesic, Location::Angle(a), Location::Angle(b)) => {
            let d = circle_distance(a, b);
            d * d
        }
        _ => f64::NAN,
    }
}

/// Arc distance on the unit circle.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = libm::fmod((a - b).abs(), 2.0 * PI);
    d.min(2.0 * PI - d)
}

/// One violated invariant with a machine-readable code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub code: &'static str,
    pub detail: String,
}

fn violation(code: &'static str, detail: String) -> Violation {
    Violation { code, detail }
}

/// Reports every violated instance invariant; an empty list means valid.
pub fn validate(instance: &ProblemInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    if instance.spaces.len() < 2 {
        out.push(violation("too-few-stages", format!("{} stages", instance.spaces.len())));
        return out;
    }
    let k = instance.k();
    for (stage, space) in instance.spaces.iter().enumerate() {
        if space.is_empty() {
            out.push(violation("empty-stage", format!("stage {stage}")));
        }
        let mut seen = BTreeSet::new();
        for label in &space.labels {
            if !seen.insert(label) {
                out.push(violation("duplicate-label", format!("stage {stage}: {label}")));
            }
        }
        match &space.coords {
            Some(c) if c.len() != space.len() => out.push(violation(
                "coords-count",
                format!("stage {stage}: {} coords for {} points", c.len(), space.len()),
            )),
            Some(Coords::Vectors(v)) => {
                let dim = v.first().map_or(0, Vec::len);
                if dim == 0 || v.iter().any(|p| p.len() != dim) {
                    out.push(violation("coords-dimension", format!("stage {stage}")));
                }
                if v.iter().flatten().any(|x| !x.is_finite()) {
                    out.push(violation("coords-nonfinite", format!("stage {stage}")));
                }
            }
            Some(Coords::Angles(a)) if a.iter().any(|x| !x.is_finite()) => {
                out.push(violation("coords-nonfinite", format!("stage {stage}")));
            }
            _ => {}
        }
    }

    match instance.costs.kind {
        CostKind::ExplicitMatrices => {
            for i in 0..k {
                for j in i + 1..=k {
                    let Some(m) = instance.costs.matrices.get(&(i, j)) else {
                        out.push(violation("missing-matrix", format!("pair {i},{j}")));
                        continue;
                    };
                    let want = (instance.stage_len(i), instance.stage_len(j));
                    if m.shape() != want {
                        out.push(violation(
                            "matrix-shape",
                            format!("pair {i},{j}: {:?}, expected {:?}", m.shape(), want),
                        ));
                        continue;
                    }
                    for (idx, &x) in m.as_slice().iter().enumerate() {
                        let (a, b) = (idx / want.1, idx % want.1);
                        if x.is_nan() || x == f64::NEG_INFINITY {
                            out.push(violation("nonfinite-cost", format!("C[{i},{j}][{a}][{b}]")));
                        } else if x < 0.0 {
                            out.push(violation(
                                "negative-cost",
                                format!("C[{i},{j}][{a}][{b}] = {x}"),
                            ));
                        }
                    }
                }
            }
            for &(i, j) in instance.costs.matrices.keys() {
                if i >= j || j > k {
                    out.push(violation("unexpected-matrix", format!("pair {i},{j}")));
                }
            }
        }
        kind => {
            let want_angles = kind == CostKind::SquaredCircleGeodesic;
            let mut dims = BTreeSet::new();
            for (stage, space) in instance.spaces.iter().enumerate() {
                match (&space.coords, want_angles) {
                    (Some(Coords::Angles(_)), true) => {}
                    (Some(Coords::Vectors(v)), false) => {
                        dims.insert(v.first().map_or(0, Vec::len));
                    }
                    _ => out.push(violation(
                        "missing-coords",
                        format!("stage {stage} lacks coordinates for {}", kind.name()),
                    )),
                }
            }
            if dims.len() > 1 {
                out.push(violation("coords-dimension", String::from("stages disagree on dimension")));
            }
        }
    }

    for (name, stage, m) in [("mu0", 0, &instance.mu0), ("muK", k, &instance.mu_k)] {
        if m.weights.len() != instance.stage_len(stage) {
            out.push(violation(
                "measure-length",
                format!("{name}: {} weights for {} points", m.weights.len(), instance.stage_len(stage)),
            ));
        }
        if m.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || !(m.skip >= 0.0) {
            out.push(violation("measure-negative", name.into()));
        }
        if m.skip != 0.0 {
            out.push(violation("endpoint-skip-mass", format!("{name} has skip mass {}", m.skip)));
        }
        let total = m.total();
        if !((total - 1.0).abs() <= tol::NORMALIZATION) {
            out.push(violation("measure-not-normalized", format!("{name} sums to {total}")));
        }
    }
    out
}

/// Materializes kernel costs into explicit matrices; explicit families are returned unchanged.
pub fn realize_costs(instance: &ProblemInstance) -> Result<CostFamily> {
    let kind = instance.costs.kind;
    if kind == CostKind::ExplicitMatrices {
        return Ok(instance.costs.clone());
    }
    for (stage, space) in instance.spaces.iter().enumerate() {
        let ok = matches!(
            (&space.coords, kind),
            (Some(Coords::Angles(_)), CostKind::SquaredCircleGeodesic)
                | (Some(Coords::Vectors(_)), CostKind::SquaredEuclidean | CostKind::Euclidean)
        );
        if !ok {
            return Err(Error::MissingCoords { stage, kind: kind.name() });
        }
    }
    let k = instance.k();
    let mut matrices = BTreeMap::new();
    for i in 0..k {
        for j in i + 1..=k {
            let m = Matrix::from_fn(instance.stage_len(i), instance.stage_len(j), |a, b| {
                instance.pair_cost(i, j, a, b)
            });
            matrices.insert((i, j), m);
        }
    }
    Ok(CostFamily::explicit(matrices))
}

impl ProblemInstance {
    /// Copy of the instance with kernel costs materialized.
    pub fn realized(&self) -> Result<ProblemInstance> {
        Ok(ProblemInstance { costs: realize_costs(self)?, ..self.clone() })
    }
}
