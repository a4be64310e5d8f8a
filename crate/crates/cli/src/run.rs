//! assemble → certify → simulate → audit → report.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use passive_agreement::graph::{has_globally_reachable_node, max_out_degree, undirected_spectrum};
use passive_agreement::interconnect::NetworkSystem;
use passive_agreement::passivity::{
    agent_storage_series, audit_agent_relation, audit_compensation_series, audit_controller_relation,
    audit_iop_agent_relation, audit_tolerance, controller_storage_series, corollary_certificate,
    static_gain_feasibility_for, ConstrainedStorage, LambdaMode, PassivityError, Reading,
};
use passive_agreement::sim::{detect_agreement, disagreement_norm, integrate, SimError, Trajectory};
use thiserror::Error;

use crate::output::{emit_plot, emit_trajectory_csv};
use crate::report::{
    AgreementSummary, AuditSummary, CertificateCheck, CertificateSummary, GraphSummary, ReadingSummary,
    RunReport, SearchSummary, SolverSummary, SplitSummary,
};
use crate::scenario::{AuditPlan, CertificatePlan, IndexSource, Prepared, SlopeConstant};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 1;
    pub const BLOW_UP: u8 = 2;
    pub const IO: u8 = 3;
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("solver failure: {0}")]
    BlowUp(SimError),
    #[error("cannot write `{}`: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => exit::CONFIG,
            RunError::BlowUp(_) => exit::BLOW_UP,
            RunError::Io { .. } => exit::IO,
        }
    }
}

impl From<PassivityError> for RunError {
    fn from(e: PassivityError) -> Self {
        RunError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub check_only: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    /// Files written, in the order csv, svg, report.
    pub files: Vec<PathBuf>,
    pub trajectory: Option<Trajectory>,
}

/// Certificate results the audits may draw indices from.
#[derive(Debug, Clone, Copy, Default)]
struct Certified {
    explicit: Option<(f64, f64, f64)>,
    searched: Option<(f64, f64, f64)>,
}

pub fn run(p: &Prepared, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let net = &p.network;
    let g = net.graph();
    let spectrum = undirected_spectrum(g);
    let graph = GraphSummary {
        vertices: g.vertex_count(),
        edges: g.edge_count(),
        lambda2: spectrum.lambda2,
        lambda_max: spectrum.lambda_max,
        max_out_degree: max_out_degree(g),
        globally_reachable: has_globally_reachable_node(g),
        balanced: g.is_balanced(),
    };
    let mut solver = SolverSummary {
        method: "rk4",
        dt: p.integration.dt,
        t_end: p.integration.t_end,
        steps: p.integration.steps(),
        record_stride: p.integration.record_stride,
        samples: None,
    };

    let (certificate, certified) = match &p.certificate {
        Some(plan) => {
            let (summary, certified) = certify(net, plan, p.slope_constant)?;
            (Some(summary), certified)
        }
        None => (None, Certified::default()),
    };

    let mut report = RunReport {
        scenario: p.name.clone(),
        mode: if opts.check_only { "check_only" } else { "simulate" },
        graph,
        solver: solver.clone(),
        certificate,
        agreement: None,
        audits: Vec::new(),
        artifacts: Vec::new(),
        wall_clock_seconds: 0.0,
    };

    std::fs::create_dir_all(&opts.out_dir).map_err(|source| RunError::Io {
        path: opts.out_dir.clone(),
        source,
    })?;
    let mut files = Vec::new();

    if opts.check_only {
        report.audits = p
            .audits
            .iter()
            .map(|a| AuditSummary::empty(a.id().as_str(), "not_run", "check-only run"))
            .collect();
        let path = opts.out_dir.join(format!("{}.report.json", p.name));
        report.artifacts = vec![file_name(&path)];
        report.wall_clock_seconds = start.elapsed().as_secs_f64();
        write(&path, report.to_json().as_bytes())?;
        files.push(path);
        return Ok(RunOutcome {
            report,
            files,
            trajectory: None,
        });
    }

    let traj = integrate(net, &p.x0, &p.integration).map_err(|e| match e {
        SimError::BlowUp { .. } | SimError::Signal { .. } => RunError::BlowUp(e),
        other => RunError::Config(other.to_string()),
    })?;
    solver.samples = Some(traj.len());
    report.solver = solver;

    let value = detect_agreement(&traj, p.agreement_tolerance, p.agreement_window)
        .map_err(|e| RunError::Config(e.to_string()))?;
    report.agreement = Some(AgreementSummary {
        detected: value.is_some(),
        value,
        tolerance: p.agreement_tolerance,
        window: p.agreement_window,
        final_disagreement: traj.frames.last().map_or(0.0, |f| disagreement_norm(&f.y)),
    });

    report.audits = p
        .audits
        .iter()
        .map(|plan| run_audit(net, &traj, plan, certified, p.slope_constant, spectrum.lambda2))
        .collect::<Result<_, _>>()?;

    let csv = opts.out_dir.join(format!("{}.trajectory.csv", p.name));
    let svg = opts.out_dir.join(format!("{}.svg", p.name));
    let json = opts.out_dir.join(format!("{}.report.json", p.name));
    emit_trajectory_csv(&traj, &csv).map_err(|source| RunError::Io {
        path: csv.clone(),
        source,
    })?;
    emit_plot(&traj, &p.name, value, &svg).map_err(|source| RunError::Io {
        path: svg.clone(),
        source,
    })?;
    report.artifacts = [&csv, &svg, &json].iter().map(|p| file_name(p)).collect();
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    write(&json, report.to_json().as_bytes())?;
    files.extend([csv, svg, json]);

    Ok(RunOutcome {
        report,
        files,
        trajectory: Some(traj),
    })
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    std::fs::write(path, bytes).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn certify(
    net: &NetworkSystem,
    plan: &CertificatePlan,
    sc: SlopeConstant,
) -> Result<(CertificateSummary, Certified), RunError> {
    let g = net.graph();
    let mut certified = Certified::default();

    let explicit = match plan.explicit {
        Some((alpha, gamma)) => {
            let c = corollary_certificate(g, plan.m, alpha, gamma)?;
            if c.pass {
                certified.explicit = Some((gamma, alpha, c.gamma_margin));
            }
            Some(CertificateCheck::from(&c))
        }
        None => None,
    };

    let search = match plan.static_gain {
        Some(b) => {
            let readings = Reading::BOTH
                .iter()
                .map(|&r| {
                    let best = static_gain_feasibility_for(g, plan.m, b, &[r])?;
                    Ok(ReadingSummary {
                        reading: r.as_str(),
                        feasible: best.is_some(),
                        best: best.as_ref().map(SplitSummary::from),
                    })
                })
                .collect::<Result<Vec<_>, PassivityError>>()?;
            let best = static_gain_feasibility_for(g, plan.m, b, &Reading::BOTH)?;
            if let Some(s) = &best {
                certified.searched = Some((s.gamma, s.alpha, s.certificate.gamma_margin));
            }
            Some(SearchSummary {
                gain: b,
                feasible: best.is_some(),
                best: best.as_ref().map(SplitSummary::from),
                readings,
            })
        }
        None => None,
    };

    let passes = certified.explicit.is_some() || certified.searched.is_some();
    let verdict = if passes && has_globally_reachable_node(g) {
        "certified"
    } else {
        "not_certified"
    };
    let m_source = match sc {
        SlopeConstant::Override(_) => "override",
        _ => "derived",
    };
    Ok((
        CertificateSummary {
            m: plan.m,
            m_source,
            explicit,
            static_gain_search: search,
            verdict,
        },
        certified,
    ))
}

fn controller_storage(net: &NetworkSystem, traj: &Trajectory) -> Result<Option<Vec<f64>>, RunError> {
    if net.controllers().iter().all(|c| c.state_dim() == 0) {
        return Ok(None);
    }
    Ok(Some(controller_storage_series(net, traj)?))
}

fn run_audit(
    net: &NetworkSystem,
    traj: &Trajectory,
    plan: &AuditPlan,
    certified: Certified,
    sc: SlopeConstant,
    lambda2: f64,
) -> Result<AuditSummary, RunError> {
    let spacing = traj.spacing();
    let id = plan.id().as_str();
    match plan {
        AuditPlan::AgentRelation { m, tolerance } => {
            let cs = ConstrainedStorage::from_network(net)?;
            let q = cs.series(traj)?;
            let tol = tolerance.unwrap_or_else(|| audit_tolerance(&[&q], spacing));
            let r = audit_agent_relation(traj, &cs, *m, tol)?;
            Ok(AuditSummary::from_report(&r, BTreeMap::from([("m", *m)]), None))
        }
        AuditPlan::ControllerRelation {
            indices,
            lambda,
            tolerance,
        } => {
            let (gamma, alpha) = match indices {
                IndexSource::Given { gamma, alpha } => (*gamma, *alpha),
                IndexSource::FromSearch => match certified.searched {
                    Some((gamma, alpha, _)) => (gamma, alpha),
                    None => return Ok(AuditSummary::empty(id, "skipped", "no feasible static-gain split")),
                },
            };
            let w = controller_storage(net, traj)?;
            let tol = tolerance.unwrap_or_else(|| match &w {
                Some(w) => audit_tolerance(&[w], spacing),
                None => audit_tolerance(&[], spacing),
            });
            let r = audit_controller_relation(traj, net.graph(), gamma, alpha, w.as_deref(), *lambda, tol)?;
            let lambda = match lambda {
                LambdaMode::Algebraic => "algebraic",
                LambdaMode::Largest => "largest",
            };
            Ok(AuditSummary::from_report(
                &r,
                BTreeMap::from([("gamma", gamma), ("alpha", alpha)]),
                Some(lambda),
            ))
        }
        AuditPlan::Compensation { epsilon, tolerance } => {
            let epsilon = match epsilon {
                Some(e) => *e,
                None => {
                    let m = sc.value().expect("compensation needs integrator agents, so M is known");
                    match certified.explicit.or(certified.searched) {
                        // ε = γλ₂ − M/2, floored.
                        Some((gamma, _, _)) => (gamma * lambda2 - m / 2.0).max(1e-6),
                        None => {
                            return Ok(AuditSummary::empty(id, "skipped", "no passing certificate to take epsilon from"))
                        }
                    }
                }
            };
            let cs = ConstrainedStorage::from_network(net)?;
            let q = cs.series(traj)?;
            let w = controller_storage(net, traj)?;
            let total: Vec<f64> = match &w {
                Some(w) => q.iter().zip(w).map(|(a, b)| a + b).collect(),
                None => q.clone(),
            };
            let tol = tolerance.unwrap_or_else(|| audit_tolerance(&[&total], spacing));
            let r = audit_compensation_series(traj, &q, w.as_deref(), epsilon, tol)?;
            Ok(AuditSummary::from_report(&r, BTreeMap::from([("epsilon", epsilon)]), None))
        }
        AuditPlan::IopAgentRelation {
            delta,
            epsilon,
            tolerance,
        } => {
            let v = agent_storage_series(net, traj)?;
            let tol = tolerance.unwrap_or_else(|| audit_tolerance(&[&v], spacing));
            let r = audit_iop_agent_relation(traj, &v, *delta, *epsilon, tol)?;
            Ok(AuditSummary::from_report(
                &r,
                BTreeMap::from([("delta", *delta), ("epsilon", *epsilon)]),
                None,
            ))
        }
    }
}
