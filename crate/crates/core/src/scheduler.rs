//! The run loop. Each TG round executes, in order: pairing, simultaneous
//! play (image updates applied after every pair has resolved), one gossip
//! block (a parallel update, or up to `gossip_budget` cascades sharing
//! `total_steps / tg_rounds` steps), and in the dynamic regime a rewiring
//! pass. Burn-in rounds run the same pipeline; when they end, resources (but
//! not images or reputations) return to the endowment.

use crate::agent::{init_population, AgentState};
use crate::config::{ActionRule, GossipMechanism, Regime, SimConfig};
use crate::error::{Error, Result};
use crate::gossip::{self, StepOutcome, TriadicTable};
use crate::io;
use crate::matrix::{perception, ImageMatrix, ReputationMatrix};
use crate::metrics::{summarize, AgentOutcome, Phase, RoundSnapshot, RunRecord};
use crate::network::{GameNetwork, SignedNetwork};
use crate::regime::{self, RoundPlan};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::trust_game::{
    apply_payoffs, decide_trustee, decide_trustor, update_images, PayoffParams, TgOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Clock {
    /// Main-phase gossip steps elapsed.
    pub step: u64,
    /// Gossip steps elapsed during burn-in.
    pub burnin_step: u64,
    /// TG rounds completed, burn-in included.
    pub round: u64,
    pub phase: Phase,
}

/// Hooks for inspecting a run while it executes. All methods default to no-ops.
pub trait Observer<S: Scalar> {
    fn on_round(&mut self, _snapshot: &RoundSnapshot, _sim: &Simulation<S>) {}
    fn on_gossip_step(
        &mut self,
        _outcome: StepOutcome,
        _images: &ImageMatrix<S>,
        _reputations: &ReputationMatrix<S>,
    ) {
    }
    fn on_parallel_update(&mut self, _reputations: &ReputationMatrix<S>) {}
}

impl<S: Scalar> Observer<S> for () {}

/// Optional pre-built inputs; anything absent is resolved from the config.
#[derive(Debug, Clone, Default)]
pub struct SimInputs {
    pub signed_network: Option<SignedNetwork>,
    pub table: Option<TriadicTable>,
}

struct Streams {
    plan: RngStream,
    gossip: RngStream,
    rewire: RngStream,
}

pub struct Simulation<S: Scalar> {
    config: SimConfig,
    agents: Vec<AgentState<S>>,
    images: ImageMatrix<S>,
    reputations: ReputationMatrix<S>,
    signed: Option<SignedNetwork>,
    game: Option<GameNetwork>,
    table: TriadicTable,
    payoffs: PayoffParams<S>,
    streams: Streams,
    clock: Clock,
    total_cooperations: u64,
    accounted_cooperations: u64,
    transmissions: u64,
    declines: u64,
    rounds: Vec<RoundSnapshot>,
}

fn pair_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j);
    if i < j {
        let (a, b) = v.split_at_mut(j);
        (&mut a[i], &mut b[0])
    } else {
        let (a, b) = v.split_at_mut(i);
        (&mut b[0], &mut a[j])
    }
}

impl<S: Scalar> Simulation<S> {
    pub fn new(config: SimConfig) -> Result<Self> {
        Self::with_inputs(config, SimInputs::default())
    }

    pub fn with_inputs(config: SimConfig, inputs: SimInputs) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        let n = config.n_agents;
        let (agents, images, reputations) =
            init_population::<S>(&config, &mut RngStream::new(seed, "population"))?;

        let table = match (inputs.table, &config.triadic_table_path) {
            (Some(t), _) => t,
            (None, Some(path)) => TriadicTable::load(path)?,
            (None, None) => TriadicTable::default(),
        };

        let signed = if config.gossip_mechanism.is_diffusive() {
            let net = match (inputs.signed_network, &config.signed_network_path) {
                (Some(net), _) => net,
                (None, Some(path)) => io::load_signed_network(path)?,
                (None, None) => io::generate_signed_network(
                    n,
                    config.signed_pos_density,
                    config.signed_neg_density,
                    &mut RngStream::new(seed, "signed-network"),
                )?,
            };
            if net.n() != n {
                return Err(Error::config(
                    "signed_network_path",
                    format!("network has {} nodes but n_agents is {n}", net.n()),
                ));
            }
            Some(net)
        } else {
            None
        };

        let game = if config.regime.uses_network() {
            Some(regime::generate_game_network(
                n,
                config.min_degree,
                &mut RngStream::new(seed, "game-network"),
            )?)
        } else {
            None
        };

        let payoffs = PayoffParams::new(
            S::of(config.stake),
            S::of(config.multiplier),
            S::of(config.return_fraction),
        );
        let phase = if config.burnin_rounds > 0 {
            Phase::BurnIn
        } else {
            Phase::Main
        };
        Ok(Self {
            agents,
            images,
            reputations,
            signed,
            game,
            table,
            payoffs,
            streams: Streams {
                plan: RngStream::new(seed, "plan"),
                gossip: RngStream::new(seed, "gossip"),
                rewire: RngStream::new(seed, "rewire"),
            },
            clock: Clock {
                step: 0,
                burnin_step: 0,
                round: 0,
                phase,
            },
            total_cooperations: 0,
            accounted_cooperations: 0,
            transmissions: 0,
            declines: 0,
            rounds: Vec::new(),
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn agents(&self) -> &[AgentState<S>] {
        &self.agents
    }

    pub fn images(&self) -> &ImageMatrix<S> {
        &self.images
    }

    pub fn reputations(&self) -> &ReputationMatrix<S> {
        &self.reputations
    }

    pub fn game_network(&self) -> Option<&GameNetwork> {
        self.game.as_ref()
    }

    pub fn signed_network(&self) -> Option<&SignedNetwork> {
        self.signed.as_ref()
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    /// Cooperative transfers since resources were last set to the endowment.
    pub fn accounted_cooperations(&self) -> u64 {
        self.accounted_cooperations
    }

    pub fn total_resources(&self) -> S {
        self.agents.iter().map(|a| a.resources).sum()
    }

    pub fn is_finished(&self) -> bool {
        self.clock.round >= self.config.total_rounds()
    }

    fn plan_round(&mut self) -> RoundPlan {
        match (self.config.regime, &self.game) {
            (Regime::WellMixed, _) => {
                regime::plan_round_wellmixed(self.config.n_agents, &mut self.streams.plan)
            }
            (_, Some(net)) => regime::plan_round_network(
                net,
                self.config.neighbor_play_prob,
                &mut self.streams.plan,
            ),
            (_, None) => unreachable!("network regimes always build a game network"),
        }
    }

    fn play(&mut self, plan: &RoundPlan) -> Vec<TgOutcome<S>> {
        let threshold = S::of(self.config.cooperation_threshold);
        let weight = S::of(self.config.image_weight);
        let rule: ActionRule = self.config.action_rule;
        let start: Vec<S> = self.agents.iter().map(|a| a.resources).collect();
        let mut outcomes = Vec::with_capacity(plan.pairs().len());
        for &(i, j) in plan.pairs() {
            let (trustor, trustee) = pair_mut(&mut self.agents, i, j);
            let seen_by_trustor = perception(i, j, &self.images, &self.reputations, weight);
            let cooperates = start[i] >= self.payoffs.stake
                && decide_trustor(trustor, j, seen_by_trustor, threshold, rule);
            let returns = cooperates && {
                let seen_by_trustee = perception(j, i, &self.images, &self.reputations, weight);
                decide_trustee(trustee, i, true, seen_by_trustee, threshold, rule)
            };
            outcomes.push(apply_payoffs(
                trustor,
                trustee,
                cooperates,
                returns,
                &self.payoffs,
            ));
        }
        let step = S::of(self.config.image_step);
        for o in &outcomes {
            update_images(&mut self.images, o, step);
        }
        outcomes
    }

    /// Runs the gossip block; returns (pieces, transmissions, declines).
    fn gossip_block(&mut self, observer: &mut impl Observer<S>) -> (u64, u64, u64) {
        match self.config.gossip_mechanism {
            GossipMechanism::Parallel => {
                self.reputations = gossip::parallel_update(&self.images);
                observer.on_parallel_update(&self.reputations);
                (0, 0, 0)
            }
            mechanism => {
                let net = self
                    .signed
                    .as_ref()
                    .expect("diffusive mechanisms carry a signed network");
                let omega = S::of(self.config.omega);
                let pieces = gossip::emit_pieces(
                    &self.images,
                    net,
                    self.config.gossip_budget,
                    self.config.effective_lifespan(),
                    &mut self.streams.gossip,
                );
                let (mut sent, mut declined) = (0, 0);
                for mut piece in pieces.iter().cloned() {
                    while !piece.is_finished() {
                        let outcome = match mechanism {
                            GossipMechanism::Triadic => gossip::triadic_step(
                                &mut piece,
                                net,
                                &self.table,
                                &mut self.reputations,
                                omega,
                                &mut self.streams.gossip,
                            ),
                            _ => gossip::simple_step(
                                &mut piece,
                                net,
                                &mut self.reputations,
                                omega,
                                &mut self.streams.gossip,
                            ),
                        };
                        match outcome {
                            StepOutcome::Transmitted { .. } => sent += 1,
                            StepOutcome::Declined { .. } => declined += 1,
                            StepOutcome::Exhausted => {}
                        }
                        observer.on_gossip_step(outcome, &self.images, &self.reputations);
                    }
                }
                (pieces.len() as u64, sent, declined)
            }
        }
    }

    /// Plays one full round. Returns `false` once the run is complete.
    pub fn step_round(&mut self, observer: &mut impl Observer<S>) -> bool {
        if self.is_finished() {
            return false;
        }
        let plan = self.plan_round();
        debug_assert!(plan.is_well_formed());
        let outcomes = self.play(&plan);
        let cooperations = outcomes.iter().filter(|o| o.trustor_cooperated).count() as u64;
        let returns = outcomes.iter().filter(|o| o.trustee_returned).count() as u64;
        self.total_cooperations += cooperations;
        self.accounted_cooperations += cooperations;

        let (pieces, sent, declined) = self.gossip_block(observer);
        self.transmissions += sent;
        self.declines += declined;
        let steps = self.config.steps_per_round();
        match self.clock.phase {
            Phase::BurnIn => self.clock.burnin_step += steps,
            Phase::Main => self.clock.step += steps,
        }

        let tie_changes = match (self.config.regime, self.game.as_mut()) {
            (Regime::DynamicNetwork, Some(net)) => {
                regime::rewire_dynamic(
                    net,
                    &self.images,
                    &self.reputations,
                    self.config.drop_nonnegative_worst,
                    &mut self.streams.rewire,
                )
                .tie_changes as u64
            }
            _ => 0,
        };

        let snapshot = RoundSnapshot {
            round: self.clock.round,
            phase: self.clock.phase,
            resources: self.agents.iter().map(|a| a.resources.widen()).collect(),
            cooperations,
            returns,
            tie_changes,
            gossip_pieces: pieces,
            gossip_transmissions: sent,
            gossip_declines: declined,
        };
        self.clock.round += 1;
        if self.clock.phase == Phase::BurnIn && self.clock.round >= self.config.burnin_rounds {
            self.clock.phase = Phase::Main;
            if self.config.reset_resources_after_burnin {
                let endowment = S::of(self.config.endowment);
                for a in &mut self.agents {
                    a.resources = endowment;
                }
                self.accounted_cooperations = 0;
            }
        }
        observer.on_round(&snapshot, self);
        self.rounds.push(snapshot);
        true
    }

    pub fn run_with(mut self, observer: &mut impl Observer<S>) -> RunRecord {
        while self.step_round(observer) {}
        self.into_record()
    }

    pub fn run(self) -> RunRecord {
        self.run_with(&mut ())
    }

    fn into_record(self) -> RunRecord {
        let summary = summarize(&self.agents);
        RunRecord {
            agents: self
                .agents
                .iter()
                .map(|a| AgentOutcome {
                    id: a.id,
                    agent_type: a.agent_type,
                    resources: a.resources.widen(),
                })
                .collect(),
            summary,
            accounted_cooperations: self.accounted_cooperations,
            total_cooperations: self.total_cooperations,
            rounds_played: self.clock.round,
            gossip_steps: self.clock.step,
            gossip_transmissions: self.transmissions,
            gossip_declines: self.declines,
            tie_changes: self.rounds.iter().map(|r| r.tie_changes).collect(),
            rounds: self.rounds,
            config: self.config,
        }
    }
}

/// Runs one simulation in double precision.
pub fn run_simulation(config: &SimConfig) -> Result<RunRecord> {
    Ok(Simulation::<f64>::new(config.clone())?.run())
}

pub fn run_simulation_with(config: &SimConfig, inputs: SimInputs) -> Result<RunRecord> {
    Ok(Simulation::<f64>::with_inputs(config.clone(), inputs)?.run())
}

/// Expected total resources from the creation identity:
/// `n * endowment + (m - 1) * k * cooperations`.
pub fn conserved_total(config: &SimConfig, cooperations: u64) -> f64 {
    config.n_agents as f64 * config.endowment
        + (config.multiplier - 1.0) * config.stake * cooperations as f64
}
