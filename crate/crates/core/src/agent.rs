use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::Result;
use crate::matrix::{ImageMatrix, ReputationMatrix};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Fixed behavioural type; never changes during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentType {
    #[serde(rename = "C")]
    Cooperator,
    #[serde(rename = "D")]
    Defector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState<S> {
    pub id: usize,
    pub agent_type: AgentType,
    pub resources: S,
    /// Remaining forgiveness per partner (cooperators under rule III).
    pub forgiveness_remaining: Vec<u32>,
    /// Remaining unconditional kindness (defectors under rule III).
    pub kindness_remaining: u32,
}

impl<S: Scalar> AgentState<S> {
    pub fn new(id: usize, agent_type: AgentType, resources: S, n: usize, leniency: u32) -> Self {
        let (forgiveness_remaining, kindness_remaining) = match agent_type {
            AgentType::Cooperator => (vec![leniency; n], 0),
            AgentType::Defector => (Vec::new(), leniency),
        };
        Self {
            id,
            agent_type,
            resources,
            forgiveness_remaining,
            kindness_remaining,
        }
    }

    pub fn is_cooperator(&self) -> bool {
        self.agent_type == AgentType::Cooperator
    }
}

pub type Population<S> = (Vec<AgentState<S>>, ImageMatrix<S>, ReputationMatrix<S>);

/// Builds the initial population: `round(defector_fraction * n)` defectors
/// placed by a seeded shuffle, everyone at the endowment, zeroed matrices.
pub fn init_population<S: Scalar>(
    config: &SimConfig,
    rng: &mut RngStream,
) -> Result<Population<S>> {
    config.validate()?;
    let n = config.n_agents;
    let defectors = config.defector_count();
    let mut types: Vec<AgentType> = (0..n)
        .map(|i| {
            if i < defectors {
                AgentType::Defector
            } else {
                AgentType::Cooperator
            }
        })
        .collect();
    types.shuffle(rng);
    let endowment = S::of(config.endowment);
    let agents = types
        .into_iter()
        .enumerate()
        .map(|(id, t)| AgentState::new(id, t, endowment, n, config.leniency_length))
        .collect();
    Ok((agents, ImageMatrix::zeros(n), ReputationMatrix::zeros(n)))
}
