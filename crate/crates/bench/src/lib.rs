//! Shared fixtures for the criterion benches.

use opiniond_core::agents::assign_opinions_seeded;
use opiniond_core::graph::generate_scale_free;
use opiniond_core::{AgentAttributes, ModelParams, Opinion, SeedingStrategy, SocialGraph};

pub struct Fixture {
    pub graph: SocialGraph,
    pub attrs: AgentAttributes,
    pub params: ModelParams,
    pub initial: Vec<Opinion>,
}

/// Scale-free graph with sampled attributes and a random 55% seeding.
pub fn fixture(nodes: usize, m_attach: usize) -> Fixture {
    let graph = generate_scale_free(nodes, m_attach, 1).expect("valid generator args");
    let params = ModelParams::default();
    let attrs = AgentAttributes::sample(&graph, &params, 7).expect("valid params");
    let initial = assign_opinions_seeded(&graph, &attrs, &SeedingStrategy::default(), 7).expect("valid seeding");
    Fixture { graph, attrs, params, initial }
}
