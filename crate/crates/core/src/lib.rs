//! Binary opinion formation on directed social networks.
//!
//! Agents follow leaders; each step every agent weighs the agreement and
//! disagreement of its leaders (scaled by their trustworthiness and
//! expertise and discounted by its own stubbornness) and abandons its
//! opinion when the net payoff turns negative.
//!
//! The crate is organised bottom-up: [`graph`] and [`stats`] hold the
//! network substrate, [`agents`] the per-node attributes and initial
//! opinions, [`dynamics`] the payoff and update rule, [`experiments`] the
//! replicated studies, and [`config`], [`output`] and [`pipeline`] the
//! command-line plumbing.

pub mod agents;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod output;
pub mod pipeline;
pub mod seed;
pub mod stats;

pub use agents::{AgentAttributes, ModelParams, Opinion, SeedingKind, SeedingStrategy};
pub use config::{parse_config, GraphSource, RunConfig};
pub use dynamics::{OpinionState, RelaxationCriterion, RunResult, StepMetrics};
pub use error::{Error, Result};
pub use experiments::{AggregateTrajectory, ExperimentSpec, SimulationConfig, SweepResult, Variation};
pub use graph::{NodeId, SocialGraph};
pub use stats::GraphStats;
