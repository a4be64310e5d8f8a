//! Case-study networks and the seeded dynamic checks built on them.

#![allow(dead_code)]

use passive_agreement::graph::{catalog, Digraph};
use passive_agreement::interconnect::NetworkSystem;
use passive_agreement::passivity::{
    agent_supply_gap, audit_agent_relation, audit_controller_relation, audit_tolerance,
    static_gain_feasibility_for, AuditReport, ConstrainedStorage, LambdaMode, Reading,
};
use passive_agreement::sim::{detect_agreement, integrate, IntegrationConfig, Trajectory};
use passive_agreement::systems::{slope_bound_m, AgentModel, ControllerModel, OutputMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::suites::SuiteResult;
use super::{linear_consensus, max_abs_diff, mean, random_balanced, random_reachable};

pub const CASE_X0: [f64; 5] = [0.23, -0.2, 1.0, -2.4, 0.0];
pub const CASE_GAIN: f64 = 2.0;

pub fn case_agents() -> Vec<AgentModel> {
    vec![
        AgentModel::integrator(),
        AgentModel::integrator(),
        AgentModel::integrator_with_output(OutputMap::tanh()),
        AgentModel::integrator_with_output(OutputMap::tanh()),
        AgentModel::integrator_with_output(OutputMap::saturation()),
    ]
}

pub fn case_network(g: Digraph) -> NetworkSystem {
    let m = g.edge_count();
    NetworkSystem::assemble(case_agents(), vec![ControllerModel::static_gain(CASE_GAIN); m], g).unwrap()
}

pub fn linear_network(g: Digraph) -> NetworkSystem {
    let (n, m) = (g.vertex_count(), g.edge_count());
    NetworkSystem::assemble(vec![AgentModel::integrator(); n], vec![ControllerModel::static_gain(1.0); m], g)
        .unwrap()
}

pub fn run_case(g: Digraph) -> Trajectory {
    integrate(&case_network(g), &CASE_X0, &IntegrationConfig::new(1e-3, 20.0, 1).unwrap()).unwrap()
}

pub fn heterogeneous_agreement() -> SuiteResult {
    let traj = run_case(catalog::heterogeneous_case());
    match detect_agreement(&traj, 1e-4, 2.0).map_err(|e| e.to_string())? {
        Some(c) if (c - 0.1776).abs() <= 5e-3 => Ok(format!("agreement {c:.6}")),
        other => Err(format!("agreement {other:?}, expected 0.1776 ± 5e-3")),
    }
}

pub fn negative_case() -> SuiteResult {
    let g = catalog::negative_case();
    let traj = run_case(g.clone());
    let c = detect_agreement(&traj, 1e-4, 2.0).map_err(|e| e.to_string())?;
    let Some(c) = c.filter(|c| (c - 0.23).abs() <= 5e-3) else {
        return Err(format!("agreement {c:?}, expected 0.23 ± 5e-3"));
    };
    let m = slope_bound_m(&case_agents().iter().filter_map(|a| a.output_map().cloned()).collect::<Vec<_>>())
        .map_err(|e| e.to_string())?;
    for k in -40..=40 {
        let b = 10f64.powf(k as f64 / 10.0);
        for reading in Reading::BOTH {
            if let Some(s) = static_gain_feasibility_for(&g, m, b, &[reading]).map_err(|e| e.to_string())? {
                return Err(format!("b = {b}: {reading} split feasible: {s:?}"));
            }
        }
    }
    Ok(format!("agreement {c:.6}; no split for b ∈ [1e-4, 1e4] under either reading"))
}

/// Integrators with unit gains against `e^{−L_o t}·x0` on `count` random
/// graphs (half with a globally reachable node, half balanced).
pub fn linear_oracle(count: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut worst = 0.0f64;
    let mut worst_mean = 0.0f64;
    for k in 0..count {
        let n = rng.gen_range(2..=10);
        let balanced = k % 2 == 1;
        let edges = if balanced {
            random_balanced(&mut rng, n, 2)
        } else {
            let extra = rng.gen_range(0..=n);
            random_reachable(&mut rng, n, extra)
        };
        let g = Digraph::new(n, edges.iter().copied()).map_err(|e| e.to_string())?;
        let net = linear_network(g);
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();

        let traj = integrate(&net, &x0, &IntegrationConfig::new(1e-3, 10.0, 1000).unwrap())
            .map_err(|e| e.to_string())?;
        for t in [1.0, 5.0, 10.0] {
            let sample = t as usize;
            if (traj.times[sample] - t).abs() > 1e-9 {
                return Err(format!("graph {k}: sample {sample} at t = {}", traj.times[sample]));
            }
            let err = max_abs_diff(&traj.states[sample], &linear_consensus(n, &edges, &x0, t));
            worst = worst.max(err);
            if err > 1e-6 {
                return Err(format!("graph {k} (n = {n}): error {err:e} at t = {t}"));
            }
        }

        if balanced {
            let long = integrate(&net, &x0, &IntegrationConfig::new(1e-2, 400.0, 100).unwrap())
                .map_err(|e| e.to_string())?;
            let c = detect_agreement(&long, 1e-7, 2.0).map_err(|e| e.to_string())?;
            let Some(c) = c else {
                return Err(format!("balanced graph {k}: no agreement detected"));
            };
            let err = (c - mean(&x0)).abs();
            worst_mean = worst_mean.max(err);
            if err > 1e-6 {
                return Err(format!("balanced graph {k}: agreement {c} vs mean {}", mean(&x0)));
            }
        }
    }
    Ok(format!("{count} graphs; max state error {worst:.2e}, max mean error {worst_mean:.2e}"))
}

pub struct CaseAudits {
    pub agent: AuditReport,
    pub controller: AuditReport,
    pub linear_gap: f64,
    pub linear_tolerance: f64,
}

pub fn case_audits() -> Result<CaseAudits, String> {
    let net = case_network(catalog::heterogeneous_case());
    let traj = run_case(catalog::heterogeneous_case());
    let cs = ConstrainedStorage::from_network(&net).map_err(|e| e.to_string())?;
    let q = cs.series(&traj).map_err(|e| e.to_string())?;
    let tol = audit_tolerance(&[&q], traj.spacing());
    let agent = audit_agent_relation(&traj, &cs, 1.0, tol).map_err(|e| e.to_string())?;
    // b‖ζ‖² = ab‖ζ‖² + ((1−a)/b)‖μ‖² with a = 1/2.
    let (gamma, alpha) = Reading::Literal.indices(CASE_GAIN, 0.5);
    let controller = audit_controller_relation(
        &traj,
        net.graph(),
        gamma,
        alpha,
        None,
        LambdaMode::Algebraic,
        audit_tolerance(&[], traj.spacing()),
    )
    .map_err(|e| e.to_string())?;

    let lin = linear_network(catalog::directed_cycle(3));
    let lin_traj = integrate(&lin, &[1.0, 2.0, 3.0], &IntegrationConfig::new(1e-3, 10.0, 1).unwrap())
        .map_err(|e| e.to_string())?;
    let lin_cs = ConstrainedStorage::from_network(&lin).map_err(|e| e.to_string())?;
    let lin_q = lin_cs.series(&lin_traj).map_err(|e| e.to_string())?;
    let linear_tolerance = audit_tolerance(&[&lin_q], lin_traj.spacing());
    let linear_gap = agent_supply_gap(&lin_traj, &lin_cs)
        .map_err(|e| e.to_string())?
        .into_iter()
        .fold(0.0, |a: f64, g| a.max(g.abs()));
    Ok(CaseAudits {
        agent,
        controller,
        linear_gap,
        linear_tolerance,
    })
}

pub fn audit_suite() -> SuiteResult {
    let a = case_audits()?;
    let summary = format!(
        "agent: {} violations (tol {:.1e}); controller: {} violations (tol {:.1e}); linear gap {:.1e} (tol {:.1e})",
        a.agent.violations,
        a.agent.tolerance,
        a.controller.violations,
        a.controller.tolerance,
        a.linear_gap,
        a.linear_tolerance
    );
    if a.agent.violations == 0 && a.controller.violations == 0 && a.linear_gap <= a.linear_tolerance {
        Ok(summary)
    } else {
        Err(summary)
    }
}

/// RK4 error at `t = 1` on the 2-node loop, at `dt` and `dt/2`.
pub fn rk4_order() -> SuiteResult {
    let net = linear_network(Digraph::new(2, [(1, 2), (2, 1)]).unwrap());
    let err = |dt: f64| {
        let traj = integrate(&net, &[1.0, -1.0], &IntegrationConfig::new(dt, 1.0, 1).unwrap()).unwrap();
        let exact = (-2.0f64).exp();
        let x = traj.final_state();
        (x[0] - exact).abs().max((x[1] + exact).abs())
    };
    let (e1, e2) = (err(0.1), err(0.05));
    let ratio = e1 / e2;
    let summary = format!("err(0.1) = {e1:.3e}, err(0.05) = {e2:.3e}, ratio {ratio:.2}");
    if ratio >= 12.0 {
        Ok(summary)
    } else {
        Err(summary)
    }
}
