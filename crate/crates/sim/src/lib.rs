//! Simulation side of FIGOA: the closed-form latency and overhead models, a
//! deterministic discrete-event network simulator driving
//! [`figoa_core::forwarder::Node`]s, scenario files and trace output.

pub mod config;
pub mod engine;
pub mod model;
pub mod scenarios;
pub mod topology;
pub mod trace;

pub use config::parse_scenario;
pub use engine::{run, Completion, ConsumerOutcome, SimResult};
pub use topology::{LinkSpec, NodeSpec, Scenario, SimTopology, WorkItem};
pub use trace::{SimTrace, TraceEvent};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("simulation exceeded {0} events")]
    Runaway(u64),
}
