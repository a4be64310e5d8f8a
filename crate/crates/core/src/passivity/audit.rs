use std::fmt;

use super::{dot, finite_difference, norm_sq, ConstrainedStorage, PassivityError};
use crate::graph::{undirected_spectrum, Digraph};
use crate::sim::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AuditId {
    /// `uᵀ proj(y) ≥ Q̇ − (M/2)‖u‖² − (M/2)‖proj(y)‖²`
    AgentRelation,
    /// `zᵀ proj(y) ≥ Ẇ + α‖μ‖² + γλ‖proj(y)‖²`
    ControllerRelation,
    /// `wᵀ proj(y) ≥ Q̇ + Ẇ + ε‖proj(y)‖²` (or with an ordinary storage `V`)
    Compensation,
    /// `uᵀ proj(y) ≥ V̇ + (δ − ½)‖u‖² + (ε − ½)‖y‖²`
    IopAgentRelation,
}

impl AuditId {
    pub const ALL: [AuditId; 4] = [
        AuditId::AgentRelation,
        AuditId::ControllerRelation,
        AuditId::Compensation,
        AuditId::IopAgentRelation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AuditId::AgentRelation => "agent_relation",
            AuditId::ControllerRelation => "controller_relation",
            AuditId::Compensation => "compensation",
            AuditId::IopAgentRelation => "iop_agent_relation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.as_str() == s)
    }
}

impl fmt::Display for AuditId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which Laplacian eigenvalue scales the `γ‖proj(y)‖²` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaMode {
    /// `λ₂`; requires `γ, α ≥ 0`.
    Algebraic,
    /// `λ_max`; the variant that stays valid for negative indices.
    Largest,
}

/// Pointwise residuals `LHS − RHS` of one dissipation inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub id: AuditId,
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub min_residual: f64,
    pub max_abs_residual: f64,
    /// Samples with `residual < −tolerance`.
    pub violations: usize,
    pub tolerance: f64,
}

impl AuditReport {
    fn new(id: AuditId, times: &[f64], residuals: Vec<f64>, tolerance: f64) -> Self {
        let min_residual = residuals.iter().copied().fold(f64::INFINITY, f64::min);
        let max_abs_residual = residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
        let violations = residuals.iter().filter(|&&r| r < -tolerance).count();
        Self {
            id,
            times: times.to_vec(),
            residuals,
            min_residual,
            max_abs_residual,
            violations,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn check_samples(traj: &Trajectory) -> Result<(), PassivityError> {
    if traj.len() < 3 {
        return Err(PassivityError::TooFewSamples(traj.len()));
    }
    Ok(())
}

fn check_series(traj: &Trajectory, series: &[f64]) -> Result<(), PassivityError> {
    if series.len() != traj.len() {
        return Err(PassivityError::SeriesLength {
            expected: traj.len(),
            got: series.len(),
        });
    }
    Ok(())
}

fn finite_param(name: &'static str, value: f64) -> Result<f64, PassivityError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(PassivityError::NonFinite { name, value })
    }
}

fn mean_free(v: &[f64]) -> Vec<f64> {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| x - mean).collect()
}

fn derivative_or_zero(traj: &Trajectory, series: Option<&[f64]>) -> Result<Vec<f64>, PassivityError> {
    match series {
        Some(s) => {
            check_series(traj, s)?;
            Ok(finite_difference(s, traj.spacing()))
        }
        None => Ok(vec![0.0; traj.len()]),
    }
}

/// `uᵀ proj(y) − Q̇` per sample. Zero for identity output maps, since then
/// `Q̇ = (P h)ᵀ ẋ = uᵀ proj(y)`.
pub fn agent_supply_gap(traj: &Trajectory, cs: &ConstrainedStorage) -> Result<Vec<f64>, PassivityError> {
    check_samples(traj)?;
    let q = cs.series(traj)?;
    let q_dot = finite_difference(&q, traj.spacing());
    Ok(traj
        .frames
        .iter()
        .zip(q_dot)
        .map(|(f, qd)| dot(&f.u, &mean_free(&f.y)) - qd)
        .collect())
}

/// Integrator-like agents with output slopes in `[0, m]` and `M = max(1, |1 − m|)`.
pub fn audit_agent_relation(
    traj: &Trajectory,
    cs: &ConstrainedStorage,
    m_const: f64,
    tol: f64,
) -> Result<AuditReport, PassivityError> {
    let m_const = finite_param("M", m_const)?;
    if m_const < 0.0 {
        return Err(PassivityError::NonPositiveM(m_const));
    }
    let gap = agent_supply_gap(traj, cs)?;
    let residuals = traj
        .frames
        .iter()
        .zip(gap)
        .map(|(f, g)| {
            let py = mean_free(&f.y);
            g + 0.5 * m_const * norm_sq(&f.u) + 0.5 * m_const * norm_sq(&py)
        })
        .collect();
    Ok(AuditReport::new(AuditId::AgentRelation, &traj.times, residuals, tol))
}

/// Controller relation with aggregated indices `(γ, α)`. `controller_storage`
/// is `Σ W_k` per sample; `None` means zero storage (static controllers).
pub fn audit_controller_relation(
    traj: &Trajectory,
    g: &Digraph,
    gamma: f64,
    alpha: f64,
    controller_storage: Option<&[f64]>,
    mode: LambdaMode,
    tol: f64,
) -> Result<AuditReport, PassivityError> {
    check_samples(traj)?;
    let gamma = finite_param("gamma", gamma)?;
    let alpha = finite_param("alpha", alpha)?;
    if mode == LambdaMode::Algebraic {
        if gamma < 0.0 {
            return Err(PassivityError::NegativeIndex {
                name: "gamma",
                value: gamma,
            });
        }
        if alpha < 0.0 {
            return Err(PassivityError::NegativeIndex {
                name: "alpha",
                value: alpha,
            });
        }
    }
    let spectrum = undirected_spectrum(g);
    let lambda = match mode {
        LambdaMode::Algebraic => spectrum.lambda2,
        LambdaMode::Largest => spectrum.lambda_max,
    };
    let w_dot = derivative_or_zero(traj, controller_storage)?;
    let residuals = traj
        .frames
        .iter()
        .zip(w_dot)
        .map(|(f, wd)| {
            let py = mean_free(&f.y);
            dot(&f.z, &py) - wd - alpha * norm_sq(&f.mu) - gamma * lambda * norm_sq(&py)
        })
        .collect();
    Ok(AuditReport::new(AuditId::ControllerRelation, &traj.times, residuals, tol))
}

/// Compensation inequality with the constrained storage `Q`.
pub fn audit_compensation(
    traj: &Trajectory,
    cs: &ConstrainedStorage,
    controller_storage: Option<&[f64]>,
    epsilon: f64,
    tol: f64,
) -> Result<AuditReport, PassivityError> {
    check_samples(traj)?;
    let q = cs.series(traj)?;
    audit_compensation_series(traj, &q, controller_storage, epsilon, tol)
}

/// Compensation inequality with any agent-side storage series (`Q` or an
/// ordinary storage `V`).
pub fn audit_compensation_series(
    traj: &Trajectory,
    agent_storage: &[f64],
    controller_storage: Option<&[f64]>,
    epsilon: f64,
    tol: f64,
) -> Result<AuditReport, PassivityError> {
    check_samples(traj)?;
    if !(epsilon > 0.0) {
        return Err(PassivityError::NonPositiveEpsilon(epsilon));
    }
    check_series(traj, agent_storage)?;
    let v_dot = finite_difference(agent_storage, traj.spacing());
    let w_dot = derivative_or_zero(traj, controller_storage)?;
    let residuals = traj
        .frames
        .iter()
        .zip(v_dot.iter().zip(w_dot))
        .map(|(f, (vd, wd))| {
            let py = mean_free(&f.y);
            dot(&f.w, &py) - vd - wd - epsilon * norm_sq(&py)
        })
        .collect();
    Ok(AuditReport::new(AuditId::Compensation, &traj.times, residuals, tol))
}

/// Agent relation derived from individual IOP-(δ_i, ε_i) agents with
/// aggregated `δ`, `ε` and the summed storage `Σ V_i`.
pub fn audit_iop_agent_relation(
    traj: &Trajectory,
    agent_storage: &[f64],
    delta: f64,
    epsilon: f64,
    tol: f64,
) -> Result<AuditReport, PassivityError> {
    check_samples(traj)?;
    let delta = finite_param("delta", delta)?;
    let epsilon = finite_param("epsilon", epsilon)?;
    if delta * epsilon >= 0.25 {
        return Err(PassivityError::Inadmissible {
            input: delta,
            output: epsilon,
        });
    }
    check_series(traj, agent_storage)?;
    let v_dot = finite_difference(agent_storage, traj.spacing());
    let residuals = traj
        .frames
        .iter()
        .zip(v_dot)
        .map(|(f, vd)| {
            let py = mean_free(&f.y);
            dot(&f.u, &py) - vd - (delta - 0.5) * norm_sq(&f.u) - (epsilon - 0.5) * norm_sq(&f.y)
        })
        .collect();
    Ok(AuditReport::new(AuditId::IopAgentRelation, &traj.times, residuals, tol))
}
