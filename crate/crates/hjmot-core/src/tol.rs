//! Shared numerical tolerances.

/// Absolute tolerance for measure normalization.
pub const NORMALIZATION: f64 = 1e-12;
/// Relative tolerance for cost comparisons.
pub const RELATIVE: f64 = 1e-9;
/// Absolute floor used together with [`RELATIVE`].
pub const ABSOLUTE_FLOOR: f64 = 1e-12;
/// Atoms lighter than this are outside the support.
pub const SUPPORT: f64 = 1e-15;
/// Per-atom tolerance for transport plan marginals.
pub const MARGINAL: f64 = 1e-9;

/// `lhs <= rhs` up to `RELATIVE * max(1, |rhs|)`.
pub fn leq(lhs: f64, rhs: f64) -> bool {
    leq_with(lhs, rhs, RELATIVE)
}

pub fn leq_with(lhs: f64, rhs: f64, rel: f64) -> bool {
    if rhs == f64::INFINITY {
        return true;
    }
    lhs <= rhs + rel * rhs.abs().max(1.0)
}

/// Upper threshold for "ties within tolerance" around a minimum value.
pub fn tie_threshold(min: f64, rel: f64) -> f64 {
    min + rel * min.abs() + ABSOLUTE_FLOOR
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
