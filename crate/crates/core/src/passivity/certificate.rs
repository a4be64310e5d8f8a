use std::fmt;

use super::{norm_sq, PassivityError, Projector};
use crate::graph::{
    has_globally_reachable_node, laplacian_quadratic_form, max_out_degree, undirected_spectrum,
    Digraph,
};

/// Margins within this distance of zero are treated as exactly zero, so the
/// strict `γλ₂ > M/2` condition is not decided by eigensolver rounding.
pub const MARGIN_TOL: f64 = 1e-10;

/// Outcome of the static agreement certificate for integrator-like agents:
/// `α ≥ max(D_o)·M/2` and `γ·λ₂ > M/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateReport {
    pub m_const: f64,
    pub max_out_degree: usize,
    pub lambda2: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// `α − max(D_o)·M/2`; needs to be `≥ 0`.
    pub alpha_margin: f64,
    /// `γ·λ₂ − M/2`; needs to be `> 0`.
    pub gamma_margin: f64,
    /// Both margin conditions hold (up to [`MARGIN_TOL`]).
    pub pass: bool,
    pub globally_reachable: bool,
}

impl CertificateReport {
    /// The margins pass and the graph has a globally reachable node, which
    /// the agreement guarantee also needs.
    pub fn certifies_agreement(&self) -> bool {
        self.pass && self.globally_reachable
    }

    pub fn min_margin(&self) -> f64 {
        self.alpha_margin.min(self.gamma_margin)
    }
}

pub fn corollary_certificate(
    g: &Digraph,
    m_const: f64,
    alpha: f64,
    gamma: f64,
) -> Result<CertificateReport, PassivityError> {
    if !(m_const > 0.0) || !m_const.is_finite() {
        return Err(PassivityError::NonPositiveM(m_const));
    }
    for (name, v) in [("alpha", alpha), ("gamma", gamma)] {
        if !v.is_finite() {
            return Err(PassivityError::NonFinite { name, value: v });
        }
        if v < 0.0 {
            return Err(PassivityError::NegativeIndex { name, value: v });
        }
    }
    Ok(certificate_unchecked(
        m_const,
        max_out_degree(g),
        undirected_spectrum(g).lambda2,
        has_globally_reachable_node(g),
        alpha,
        gamma,
    ))
}

fn certificate_unchecked(
    m_const: f64,
    max_out_degree: usize,
    lambda2: f64,
    globally_reachable: bool,
    alpha: f64,
    gamma: f64,
) -> CertificateReport {
    let alpha_margin = alpha - max_out_degree as f64 * m_const / 2.0;
    let gamma_margin = gamma * lambda2 - m_const / 2.0;
    CertificateReport {
        m_const,
        max_out_degree,
        lambda2,
        alpha,
        gamma,
        alpha_margin,
        gamma_margin,
        pass: alpha_margin >= -MARGIN_TOL && gamma_margin > MARGIN_TOL,
        globally_reachable,
    }
}

/// How the split `b‖ζ‖² = ab‖ζ‖² + ((1−a)/b)‖μ‖²` is mapped onto `(γ, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reading {
    /// `γ = ab` on `‖ζ‖²`, `α = (1−a)/b` on `‖μ‖²`, matching the controller
    /// relation term by term.
    Literal,
    /// `α = ab`, `γ = (1−a)/b`: the assignment under which the heterogeneous
    /// case study checks `ab ≥ max(D_o)M/2` and `λ₂(1−a)/b > M/2`.
    CaseStudy,
}

impl Reading {
    pub const BOTH: [Reading; 2] = [Reading::Literal, Reading::CaseStudy];

    pub fn as_str(&self) -> &'static str {
        match self {
            Reading::Literal => "literal",
            Reading::CaseStudy => "case_study",
        }
    }

    /// `(γ, α)` for gain `b` and split `a`.
    pub fn indices(&self, b: f64, a: f64) -> (f64, f64) {
        match self {
            Reading::Literal => (a * b, (1.0 - a) / b),
            Reading::CaseStudy => ((1.0 - a) / b, a * b),
        }
    }
}

impl fmt::Display for Reading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A feasible split of a static gain into controller indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticGainSplit {
    pub split: f64,
    pub reading: Reading,
    pub gamma: f64,
    pub alpha: f64,
    pub certificate: CertificateReport,
}

/// Certificate for one given split `a ∈ (0, 1)` under one reading.
pub fn evaluate_split(
    g: &Digraph,
    m_const: f64,
    b: f64,
    a: f64,
    reading: Reading,
) -> Result<CertificateReport, PassivityError> {
    if !(b > 0.0) {
        return Err(PassivityError::NonPositiveGain(b));
    }
    let (gamma, alpha) = reading.indices(b, a);
    corollary_certificate(g, m_const, alpha, gamma)
}

const SPLIT_GRID: usize = 1000;

/// Search `a ∈ (0, 1)` for a split of the static gain `b` that passes the
/// certificate under either reading. Returns the split with the largest
/// minimum margin (first one found on ties), or `None`.
pub fn static_gain_feasibility(
    g: &Digraph,
    m_const: f64,
    b: f64,
) -> Result<Option<StaticGainSplit>, PassivityError> {
    static_gain_feasibility_for(g, m_const, b, &Reading::BOTH)
}

/// [`static_gain_feasibility`] restricted to the given readings.
pub fn static_gain_feasibility_for(
    g: &Digraph,
    m_const: f64,
    b: f64,
    readings: &[Reading],
) -> Result<Option<StaticGainSplit>, PassivityError> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(PassivityError::NonPositiveGain(b));
    }
    if !(m_const > 0.0) || !m_const.is_finite() {
        return Err(PassivityError::NonPositiveM(m_const));
    }
    let d_max = max_out_degree(g);
    let lambda2 = undirected_spectrum(g).lambda2;
    let reachable = has_globally_reachable_node(g);

    let mut best: Option<StaticGainSplit> = None;
    for &reading in readings {
        for k in 1..SPLIT_GRID {
            let a = k as f64 / SPLIT_GRID as f64;
            let (gamma, alpha) = reading.indices(b, a);
            let cert = certificate_unchecked(m_const, d_max, lambda2, reachable, alpha, gamma);
            if !cert.pass {
                continue;
            }
            if best.is_none_or(|b| cert.min_margin() > b.certificate.min_margin()) {
                best = Some(StaticGainSplit {
                    split: a,
                    reading,
                    gamma,
                    alpha,
                    certificate: cert,
                });
            }
        }
    }
    Ok(best)
}

/// Both sides of `λ₂‖proj(y)‖² ≤ yᵀL(𝔾)y ≤ λ_max‖proj(y)‖²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighCheck {
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub quadratic_form: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

/// Evaluate both bounds with slack `1e−9·‖y‖²`. The undirected counterpart
/// must be connected.
pub fn rayleigh_bounds_check(g: &Digraph, y: &[f64]) -> Result<RayleighCheck, PassivityError> {
    let n = g.vertex_count();
    if y.len() != n {
        return Err(PassivityError::Dimension {
            expected: n,
            got: y.len(),
        });
    }
    if !undirected_connected(g) {
        return Err(PassivityError::Disconnected);
    }
    let spectrum = undirected_spectrum(g);
    let p_norm_sq = norm_sq(&Projector::new(n).apply(y)?);
    let quadratic_form = laplacian_quadratic_form(g, y);
    let slack = 1e-9 * norm_sq(y);
    let lower_bound = spectrum.lambda2 * p_norm_sq;
    let upper_bound = spectrum.lambda_max * p_norm_sq;
    Ok(RayleighCheck {
        lower_ok: lower_bound <= quadratic_form + slack,
        upper_ok: quadratic_form <= upper_bound + slack,
        quadratic_form,
        lower_bound,
        upper_bound,
    })
}

fn undirected_connected(g: &Digraph) -> bool {
    let n = g.vertex_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut components = n;
    for e in g.edges() {
        let (a, b) = (find(&mut parent, e.head), find(&mut parent, e.tail));
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}
