//! The structured run report. Key names are stable; everything except
//! `wall_clock_seconds` is a deterministic function of the scenario.

use std::collections::BTreeMap;

use passive_agreement::passivity::{AuditReport, CertificateReport, StaticGainSplit};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    /// `"simulate"` or `"check_only"`.
    pub mode: &'static str,
    pub graph: GraphSummary,
    pub solver: SolverSummary,
    pub certificate: Option<CertificateSummary>,
    /// Absent in check-only runs.
    pub agreement: Option<AgreementSummary>,
    pub audits: Vec<AuditSummary>,
    pub artifacts: Vec<String>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub vertices: usize,
    pub edges: usize,
    pub lambda2: f64,
    pub lambda_max: f64,
    pub max_out_degree: usize,
    pub globally_reachable: bool,
    pub balanced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSummary {
    pub method: &'static str,
    pub dt: f64,
    pub t_end: f64,
    pub steps: usize,
    pub record_stride: usize,
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSummary {
    pub m: f64,
    /// `"override"` or `"derived"`.
    pub m_source: &'static str,
    pub explicit: Option<CertificateCheck>,
    pub static_gain_search: Option<SearchSummary>,
    /// `"certified"` when some set of indices passes and the graph has a
    /// globally reachable node, `"not_certified"` otherwise.
    pub verdict: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateCheck {
    pub alpha: f64,
    pub gamma: f64,
    pub alpha_margin: f64,
    pub gamma_margin: f64,
    pub pass: bool,
    pub certifies_agreement: bool,
}

impl From<&CertificateReport> for CertificateCheck {
    fn from(c: &CertificateReport) -> Self {
        Self {
            alpha: c.alpha,
            gamma: c.gamma,
            alpha_margin: c.alpha_margin,
            gamma_margin: c.gamma_margin,
            pass: c.pass,
            certifies_agreement: c.certifies_agreement(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSummary {
    pub gain: f64,
    pub feasible: bool,
    pub best: Option<SplitSummary>,
    /// Best split per role reading, in the order `literal`, `case_study`.
    pub readings: Vec<ReadingSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReadingSummary {
    pub reading: &'static str,
    pub feasible: bool,
    pub best: Option<SplitSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitSummary {
    pub reading: &'static str,
    pub split: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub alpha_margin: f64,
    pub gamma_margin: f64,
}

impl From<&StaticGainSplit> for SplitSummary {
    fn from(s: &StaticGainSplit) -> Self {
        Self {
            reading: s.reading.as_str(),
            split: s.split,
            alpha: s.alpha,
            gamma: s.gamma,
            alpha_margin: s.certificate.alpha_margin,
            gamma_margin: s.certificate.gamma_margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementSummary {
    pub detected: bool,
    /// `null` when the outputs did not agree within the tolerance.
    pub value: Option<f64>,
    pub tolerance: f64,
    pub window: f64,
    pub final_disagreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditSummary {
    pub id: &'static str,
    /// `"passed"`, `"failed"`, `"skipped"` or `"not_run"`.
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub params: BTreeMap<&'static str, f64>,
    pub lambda: Option<&'static str>,
    pub samples: usize,
    pub violations: usize,
    pub min_residual: Option<f64>,
    pub max_abs_residual: Option<f64>,
    pub tolerance: Option<f64>,
}

impl AuditSummary {
    pub fn empty(id: &'static str, status: &'static str, reason: impl Into<String>) -> Self {
        Self {
            id,
            status,
            reason: Some(reason.into()),
            params: BTreeMap::new(),
            lambda: None,
            samples: 0,
            violations: 0,
            min_residual: None,
            max_abs_residual: None,
            tolerance: None,
        }
    }

    pub fn from_report(r: &AuditReport, params: BTreeMap<&'static str, f64>, lambda: Option<&'static str>) -> Self {
        Self {
            id: r.id.as_str(),
            status: if r.passed() { "passed" } else { "failed" },
            reason: None,
            params,
            lambda,
            samples: r.residuals.len(),
            violations: r.violations,
            min_residual: Some(r.min_residual),
            max_abs_residual: Some(r.max_abs_residual),
            tolerance: Some(r.tolerance),
        }
    }
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s
    }
}
