//! Channel assignment for Wi-Fi deployments modelled as three-layer
//! interference graphs.
//!
//! The pipeline is:
//!
//! 1. [`scenario`] generates, prunes and splits deployments between two
//!    providers, and reads/writes the scenario text format.
//! 2. [`graph`] builds the multilayer graph: attachment (WD to closest AP),
//!    interference (nodes closer than `R`) and provider membership.
//! 3. [`radio`] turns a channel vector into SINR and normalized-throughput
//!    utilities; [`evaluator`] is the precomputed, incremental form used by
//!    the solvers.
//! 4. [`negotiation`] runs single-text mediation with hill-climbing or
//!    annealing provider agents; [`optimizers`] holds the uniform-random
//!    baseline, the augmented-Lagrangian PSO and an exhaustive oracle.
//! 5. [`metrics`] computes the structural graph metrics, and [`harness`]
//!    drives whole experiment plans and emits CSV reports.

pub mod error;
pub mod evaluator;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod negotiation;
pub mod optimizers;
pub mod radio;
pub mod scenario;
pub mod seed;

pub use error::{Error, Result};
pub use evaluator::{Evaluation, UtilityModel};
pub use graph::MultilayerGraph;
pub use radio::{Channel, Contract, RadioParams};
pub use scenario::{Layout, Node, NodeKind, ProviderId, Scenario, ScenarioConfig};
