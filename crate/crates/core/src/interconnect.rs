//! Closed-loop assembly of agents, edge controllers and a digraph.
//!
//! Signals follow the feedback structure with the in-incidence part exposed
//! as an external output:
//!
//! ```text
//! ζ = Eᵀ y,   μ = ψ(η, ζ),   z = E μ,   w = B_i μ,   u = w − z = −B_o μ
//! ```
//!
//! The stacked state is `(x_1, …, x_|V|, η_1, …, η_|E|)`; static controllers
//! own an empty block.

use std::ops::Range;

use thiserror::Error;

use crate::graph::{has_globally_reachable_node, incidence_matrices, Digraph, IncidenceSet};
use crate::systems::{AgentModel, ControllerModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterconnectError {
    #[error("graph has {vertices} vertices but {agents} agents were supplied")]
    AgentCount { vertices: usize, agents: usize },
    #[error("graph has {edges} edges but {controllers} controllers were supplied")]
    ControllerCount { edges: usize, controllers: usize },
    #[error("stacked state has length {got}, expected {expected}")]
    StateLength { expected: usize, got: usize },
    #[error("non-finite value in signal {signal}[{index}] = {value}")]
    NonFinite {
        signal: &'static str,
        index: usize,
        value: f64,
    },
}

/// Offsets of each agent's and controller's block inside the stacked state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLayout {
    agent_offsets: Vec<usize>,
    controller_offsets: Vec<usize>,
    total: usize,
}

impl StateLayout {
    fn new(agent_dims: &[usize], controller_dims: &[usize]) -> Self {
        let mut offset = 0;
        let mut agent_offsets = Vec::with_capacity(agent_dims.len() + 1);
        for d in agent_dims {
            agent_offsets.push(offset);
            offset += d;
        }
        agent_offsets.push(offset);
        let mut controller_offsets = Vec::with_capacity(controller_dims.len() + 1);
        for d in controller_dims {
            controller_offsets.push(offset);
            offset += d;
        }
        controller_offsets.push(offset);
        Self {
            agent_offsets,
            controller_offsets,
            total: offset,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn agent_count(&self) -> usize {
        self.agent_offsets.len() - 1
    }

    pub fn controller_count(&self) -> usize {
        self.controller_offsets.len() - 1
    }

    pub fn agent(&self, i: usize) -> Range<usize> {
        self.agent_offsets[i]..self.agent_offsets[i + 1]
    }

    pub fn controller(&self, k: usize) -> Range<usize> {
        self.controller_offsets[k]..self.controller_offsets[k + 1]
    }

    /// The contiguous agent part `x` of the stacked state.
    pub fn agents(&self) -> Range<usize> {
        0..self.agent_offsets[self.agent_count()]
    }

    /// The contiguous controller part `η` of the stacked state.
    pub fn controllers(&self) -> Range<usize> {
        self.controller_offsets[0]..self.total
    }
}

/// The six closed-loop signals at one instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignalFrame {
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub zeta: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct NetworkSystem {
    agents: Vec<AgentModel>,
    controllers: Vec<ControllerModel>,
    graph: Digraph,
    incidence: IncidenceSet,
    layout: StateLayout,
    globally_reachable: bool,
}

impl NetworkSystem {
    /// Assemble the closed loop. Graphs without a globally reachable node are
    /// accepted (see [`NetworkSystem::has_globally_reachable_node`]); the
    /// agreement results need one, simulation does not.
    pub fn assemble(
        agents: Vec<AgentModel>,
        controllers: Vec<ControllerModel>,
        graph: Digraph,
    ) -> Result<Self, InterconnectError> {
        if agents.len() != graph.vertex_count() {
            return Err(InterconnectError::AgentCount {
                vertices: graph.vertex_count(),
                agents: agents.len(),
            });
        }
        if controllers.len() != graph.edge_count() {
            return Err(InterconnectError::ControllerCount {
                edges: graph.edge_count(),
                controllers: controllers.len(),
            });
        }
        let agent_dims: Vec<usize> = agents.iter().map(AgentModel::state_dim).collect();
        let controller_dims: Vec<usize> =
            controllers.iter().map(ControllerModel::state_dim).collect();
        Ok(Self {
            layout: StateLayout::new(&agent_dims, &controller_dims),
            incidence: incidence_matrices(&graph),
            globally_reachable: has_globally_reachable_node(&graph),
            agents,
            controllers,
            graph,
        })
    }

    pub fn agents(&self) -> &[AgentModel] {
        &self.agents
    }

    pub fn controllers(&self) -> &[ControllerModel] {
        &self.controllers
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn incidence(&self) -> &IncidenceSet {
        &self.incidence
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn state_dim(&self) -> usize {
        self.layout.total()
    }

    pub fn has_globally_reachable_node(&self) -> bool {
        self.globally_reachable
    }

    /// All agents are of the `ẋ = u, y = h(x)` family.
    pub fn is_integrator_like(&self) -> bool {
        self.agents.iter().all(AgentModel::is_integrator_like)
    }

    fn check_len(&self, state: &[f64]) -> Result<(), InterconnectError> {
        if state.len() != self.layout.total() {
            return Err(InterconnectError::StateLength {
                expected: self.layout.total(),
                got: state.len(),
            });
        }
        Ok(())
    }

    /// Evaluate `y → ζ → μ → (z, w, u)` at a stacked state.
    pub fn signals_at(&self, state: &[f64]) -> Result<SignalFrame, InterconnectError> {
        self.check_len(state)?;
        let n = self.graph.vertex_count();
        let m = self.graph.edge_count();

        let y: Vec<f64> = (0..n)
            .map(|i| self.agents[i].output(&state[self.layout.agent(i)]))
            .collect();
        finite("y", &y)?;

        let zeta: Vec<f64> = self
            .graph
            .edges()
            .iter()
            .map(|e| y[e.head] - y[e.tail])
            .collect();

        let mu: Vec<f64> = (0..m)
            .map(|k| self.controllers[k].output(&state[self.layout.controller(k)], zeta[k]))
            .collect();
        finite("mu", &mu)?;

        // w = B_i μ, z = E μ, u = −B_o μ; B_o has +1 at heads, B_i has −1 at tails.
        let mut w = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut u = vec![0.0; n];
        for (k, e) in self.graph.edges().iter().enumerate() {
            z[e.head] += mu[k];
            z[e.tail] -= mu[k];
            w[e.tail] -= mu[k];
            u[e.head] -= mu[k];
        }
        Ok(SignalFrame {
            u,
            y,
            w,
            z,
            zeta,
            mu,
        })
    }

    /// Stacked time derivative, written into `out`.
    pub fn closed_loop_derivative(
        &self,
        state: &[f64],
        _t: f64,
        out: &mut [f64],
    ) -> Result<(), InterconnectError> {
        let frame = self.signals_at(state)?;
        self.derivative_from_frame(state, &frame, out);
        finite("derivative", out)
    }

    pub(crate) fn derivative_from_frame(&self, state: &[f64], frame: &SignalFrame, out: &mut [f64]) {
        for (i, agent) in self.agents.iter().enumerate() {
            let r = self.layout.agent(i);
            agent.derivative(&state[r.clone()], frame.u[i], &mut out[r]);
        }
        for (k, ctrl) in self.controllers.iter().enumerate() {
            let r = self.layout.controller(k);
            if !r.is_empty() {
                ctrl.derivative(&state[r.clone()], frame.zeta[k], &mut out[r]);
            }
        }
    }

    /// `Σ_k W_k(η_k)`, or `None` if some controller has no declared storage.
    pub fn controller_storage(&self, state: &[f64]) -> Option<f64> {
        self.controllers
            .iter()
            .enumerate()
            .map(|(k, c)| c.storage(&state[self.layout.controller(k)]))
            .sum()
    }

    /// `Σ_i ∫₀^{x_i} h_i(s) ds`, or `None` unless every agent is integrator-like.
    pub fn agent_storage(&self, state: &[f64]) -> Option<f64> {
        self.agents
            .iter()
            .enumerate()
            .map(|(i, a)| a.storage(&state[self.layout.agent(i)]))
            .sum()
    }
}

fn finite(signal: &'static str, v: &[f64]) -> Result<(), InterconnectError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(InterconnectError::NonFinite {
            signal,
            index,
            value: v[index],
        }),
        None => Ok(()),
    }
}
