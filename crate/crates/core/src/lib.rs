//! Output agreement of passive agents interconnected over directed graphs.
//!
//! A network is a set of SISO agents (one per vertex) and SISO edge
//! controllers (one per edge) wired together through the incidence matrix of
//! a digraph. This crate assembles such networks, simulates them, and checks
//! the passivity-based conditions under which all agent outputs converge to a
//! common value:
//!
//! | module | contents |
//! |--------|----------|
//! | [`graph`] | digraphs, incidence matrices `E = B_o + B_i`, Laplacians, reachability, `λ₂` |
//! | [`systems`] | agent and controller models, output maps, passivity indices, `M` |
//! | [`interconnect`] | the closed loop and its six signals `u, y, w, z, ζ, μ` |
//! | [`sim`] | fixed-step RK4, trajectories, agreement detection |
//! | [`passivity`] | projection onto the disagreement subspace, constrained storage, audits, certificate |
//!
//! ```
//! use passive_agreement::graph::catalog;
//! use passive_agreement::interconnect::NetworkSystem;
//! use passive_agreement::sim::{detect_agreement, integrate, IntegrationConfig};
//! use passive_agreement::systems::{AgentModel, ControllerModel, OutputMap};
//!
//! let agents = vec![
//!     AgentModel::integrator(),
//!     AgentModel::integrator(),
//!     AgentModel::integrator_with_output(OutputMap::tanh()),
//!     AgentModel::integrator_with_output(OutputMap::tanh()),
//!     AgentModel::integrator_with_output(OutputMap::saturation()),
//! ];
//! let controllers = vec![ControllerModel::static_gain(2.0); 8];
//! let net = NetworkSystem::assemble(agents, controllers, catalog::heterogeneous_case()).unwrap();
//!
//! let cfg = IntegrationConfig::new(1e-3, 20.0, 10).unwrap();
//! let traj = integrate(&net, &[0.23, -0.2, 1.0, -2.4, 0.0], &cfg).unwrap();
//! let c = detect_agreement(&traj, 1e-4, 2.0).unwrap().expect("outputs agree");
//! assert!((c - 0.1776).abs() < 5e-3);
//! ```
//!
//! The guide in `book/` walks through each piece; its code listings are
//! compiled and run as doc-tests of this crate.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod graph;
pub mod interconnect;
pub mod linalg;
pub mod passivity;
mod quadrature;
pub mod sim;
pub mod systems;

pub use quadrature::adaptive_simpson;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/closed-loop.md")]
    mod closed_loop {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/constrained-storage.md")]
    mod constrained_storage {}
    #[doc = include_str!("../../../book/src/audits.md")]
    mod audits {}
    #[doc = include_str!("../../../book/src/certificate.md")]
    mod certificate {}
}
