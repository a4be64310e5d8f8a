//! Agreement-submanifold projection, constrained storage, trajectory-level
//! dissipation audits and the static certificate for integrator-like networks.
//!
//! Every audit evaluates one pointwise dissipation inequality along a recorded
//! [`Trajectory`](crate::sim::Trajectory). Storage derivatives are not known
//! analytically along a numerical run, so they are estimated with central
//! differences over the recorded samples (second-order one-sided at the
//! ends). A residual is `LHS − RHS` of the inequality; the audit counts the
//! samples where it drops below `−tolerance`.

mod audit;
mod certificate;
mod projector;
mod storage;

pub use audit::{
    agent_supply_gap, audit_agent_relation, audit_compensation, audit_compensation_series,
    audit_controller_relation, audit_iop_agent_relation, AuditId, AuditReport, LambdaMode,
};
pub use certificate::{
    corollary_certificate, evaluate_split, rayleigh_bounds_check, static_gain_feasibility,
    static_gain_feasibility_for, CertificateReport, RayleighCheck, Reading, StaticGainSplit,
};
pub use projector::{proj_disagreement, Projector};
pub use storage::{agent_storage_series, controller_storage_series, ConstrainedStorage};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PassivityError {
    #[error("vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("audits need at least 3 samples, trajectory has {0}")]
    TooFewSamples(usize),
    #[error("storage series has {got} samples, trajectory has {expected}")]
    SeriesLength { expected: usize, got: usize },
    #[error("index {name} = {value} must be non-negative (use LambdaMode::Largest for negative indices)")]
    NegativeIndex { name: &'static str, value: f64 },
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("slope constant M must be positive, got {0}")]
    NonPositiveM(f64),
    #[error("static gain must be positive, got {0}")]
    NonPositiveGain(f64),
    #[error("indices ({input}, {output}) violate input·output < 1/4")]
    Inadmissible { input: f64, output: f64 },
    #[error("the undirected counterpart of the graph is disconnected")]
    Disconnected,
    #[error("agent {0} is not integrator-like")]
    NotIntegratorLike(usize),
    #[error("controller {0} has no declared storage function")]
    MissingControllerStorage(usize),
    #[error("parameter {name} = {value} is not finite")]
    NonFinite { name: &'static str, value: f64 },
}

/// Time derivative of a uniformly sampled series: central differences inside,
/// second-order one-sided differences at both ends.
pub fn finite_difference(values: &[f64], spacing: f64) -> Vec<f64> {
    let n = values.len();
    if n < 3 {
        return vec![0.0; n];
    }
    let mut d = Vec::with_capacity(n);
    d.push((-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * spacing));
    for i in 1..n - 1 {
        d.push((values[i + 1] - values[i - 1]) / (2.0 * spacing));
    }
    d.push((3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * spacing));
    d
}

/// Estimated worst-case error of [`finite_difference`] on `values`.
///
/// Each stencil is second order, so its errors at spacings `h` and `2h` are
/// `≈ C·h²` and `≈ 4C·h²`, and `|D_2h − D_h| / 3` estimates the error at `h`.
/// Applied to the central stencil inside and to the one-sided stencils at
/// both ends.
pub fn finite_difference_error(values: &[f64], spacing: f64) -> f64 {
    let n = values.len();
    if n < 5 {
        return 0.0;
    }
    let one_sided = |v0: f64, v1: f64, v2: f64, step: f64| (-3.0 * v0 + 4.0 * v1 - v2) / (2.0 * step);
    let head = (one_sided(values[0], values[2], values[4], 2.0 * spacing)
        - one_sided(values[0], values[1], values[2], spacing))
    .abs()
        / 3.0;
    let tail = (one_sided(values[n - 1], values[n - 3], values[n - 5], 2.0 * spacing)
        - one_sided(values[n - 1], values[n - 2], values[n - 3], spacing))
    .abs()
        / 3.0;
    (2..n - 2)
        .map(|i| {
            let dh = (values[i + 1] - values[i - 1]) / (2.0 * spacing);
            let d2h = (values[i + 2] - values[i - 2]) / (4.0 * spacing);
            (d2h - dh).abs() / 3.0
        })
        .fold(head.max(tail), f64::max)
}

/// Safety factor applied to the leading-order error estimate.
pub const TOLERANCE_SAFETY: f64 = 2.0;

/// Audit tolerance `max(1e−6, C·h²)`, where `C·h²` is
/// [`TOLERANCE_SAFETY`] times the step-halving estimate on each of the given
/// storage series (the largest wins).
pub fn audit_tolerance(series: &[&[f64]], spacing: f64) -> f64 {
    series
        .iter()
        .map(|s| TOLERANCE_SAFETY * finite_difference_error(s, spacing))
        .fold(1e-6, f64::max)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}
