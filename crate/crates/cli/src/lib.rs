//! Scenario-driven runs of passive-agreement networks.
//!
//! A scenario file names a graph, the agents and controllers on it, an
//! initial state and the checks to perform. [`run::run`] assembles the
//! network, evaluates the certificate, simulates, audits the dissipation
//! inequalities along the trajectory and writes three artifacts:
//! `<name>.trajectory.csv`, `<name>.svg` and `<name>.report.json`.
//!
//! ```
//! use passive_agreement_cli::scenario::parse_scenario;
//!
//! let text = r#"
//! name = "pair"
//! x0 = [1.0, -1.0]
//!
//! [graph]
//! vertices = 2
//! edges = [[1, 2], [2, 1]]
//!
//! [[agents]]
//! kind = "integrator"
//! count = 2
//!
//! [[controllers]]
//! kind = "static_gain"
//! count = 2
//! params = { gain = 1.0 }
//! "#;
//! let scenario = parse_scenario(text).unwrap();
//! let prepared = scenario.prepare().unwrap();
//! assert_eq!(prepared.network.state_dim(), 2);
//! ```

pub mod output;
pub mod report;
pub mod run;
pub mod scenario;

use std::path::Path;

use scenario::{parse_scenario, Diagnostics, Scenario};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invalid(Diagnostics),
}

impl LoadError {
    pub fn exit_code(&self) -> u8 {
        match self {
            LoadError::Io { .. } => run::exit::IO,
            LoadError::Invalid(_) => run::exit::CONFIG,
        }
    }
}

/// Read and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text).map_err(LoadError::Invalid)
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/scenarios.md")]
mod book_scenarios {}
