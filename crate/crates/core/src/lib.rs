//! Agent-based simulator of reputation-mediated Trust Games.
//!
//! Agents of fixed type (cooperator or defector) play rounds of a binary
//! Trust Game. What they know about each other comes from two separate
//! stores: direct experience (images) and gossip (reputations). Gossip
//! spreads either as a perfect-information average, as unconditional
//! diffusion over a signed friendship/antipathy network, or through
//! triad-dependent transmission rules. Partners are drawn well-mixed, from a
//! static network, or from a network rewired every round by reputation.
//!
//! The numeric core is generic over [`Scalar`] (`f32`/`f64`); the aliases
//! below fix it to the precision used for experiments.

pub mod agent;
pub mod config;
pub mod error;
pub mod gossip;
pub mod io;
pub mod matrix;
pub mod metrics;
pub mod network;
pub mod regime;
pub mod rng;
pub mod scalar;
pub mod scheduler;
pub mod sweep;
pub mod trust_game;

pub use agent::{init_population, AgentType};
pub use config::{ActionRule, GossipMechanism, Regime, SimConfig};
pub use error::{Error, Result};
pub use gossip::{TriadicTable, Valence};
pub use metrics::{
    aggregate, summarize, AggregateTable, Phase, ResourceSummary, RoundSnapshot, RunRecord,
};
pub use network::{GameNetwork, Sign, SignedNetwork};
pub use rng::RngStream;
pub use scalar::Scalar;
pub use scheduler::{conserved_total, run_simulation, run_simulation_with, Observer, SimInputs};
pub use sweep::{run_sweep, SweepOutput, SweepSpec};

pub type Real = f64;

pub type AgentState = agent::AgentState<Real>;
pub type ImageMatrix = matrix::ImageMatrix<Real>;
pub type ReputationMatrix = matrix::ReputationMatrix<Real>;
pub type GossipPiece = gossip::GossipPiece<Real>;
pub type TgOutcome = trust_game::TgOutcome<Real>;
pub type PayoffParams = trust_game::PayoffParams<Real>;
pub type Simulation = scheduler::Simulation<Real>;

pub type AgentStateF32 = agent::AgentState<f32>;
pub type ImageMatrixF32 = matrix::ImageMatrix<f32>;
pub type ReputationMatrixF32 = matrix::ReputationMatrix<f32>;
pub type SimulationF32 = scheduler::Simulation<f32>;
