//! Trust Game partner selection (well-mixed, static and dynamic networks)
//! and the dynamic-network rewiring pass.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{ImageMatrix, ReputationMatrix};
use crate::network::GameNetwork;
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// One round's pairings: exactly one `(trustor, trustee)` pair per agent,
/// indexed by trustor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundPlan {
    pairs: Vec<(usize, usize)>,
}

impl RoundPlan {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn trustee_of(&self, trustor: usize) -> usize {
        self.pairs[trustor].1
    }

    /// How many times each agent is chosen as trustee.
    pub fn trustee_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.pairs.len()];
        for &(_, j) in &self.pairs {
            counts[j] += 1;
        }
        counts
    }

    /// Every agent trusts exactly once and never picks itself.
    pub fn is_well_formed(&self) -> bool {
        self.pairs
            .iter()
            .enumerate()
            .all(|(k, &(i, j))| k == i && i != j && j < self.pairs.len())
    }
}

/// Uniformly random other agent, drawn from `0..n` minus `me`.
fn uniform_other(n: usize, me: usize, rng: &mut RngStream) -> usize {
    let k = rng.gen_range(0..n - 1);
    if k >= me {
        k + 1
    } else {
        k
    }
}

pub fn plan_round_wellmixed(n: usize, rng: &mut RngStream) -> RoundPlan {
    assert!(n >= 2, "a round needs at least two agents");
    RoundPlan {
        pairs: (0..n).map(|i| (i, uniform_other(n, i, rng))).collect(),
    }
}

/// Random game network: every agent draws partners until it holds `d`
/// distinct ones of its own choosing. Pairs chosen from both ends merge.
pub fn generate_game_network(n: usize, d: usize, rng: &mut RngStream) -> Result<GameNetwork> {
    if n < 2 || d == 0 || d > n - 1 {
        return Err(Error::config(
            "min_degree",
            format!("{d} is outside 1..={}", n.saturating_sub(1)),
        ));
    }
    let mut net = GameNetwork::new(n);
    for i in 0..n {
        let mut chosen = BTreeSet::new();
        while chosen.len() < d {
            chosen.insert(uniform_other(n, i, rng));
        }
        for j in chosen {
            net.add_edge(i, j);
        }
    }
    Ok(net)
}

/// Network-regime pairing: with probability `neighbor_prob` the trustee is a
/// uniformly random neighbor, otherwise a uniformly random non-neighbor.
/// Trustors adjacent to everyone always pick a neighbor.
pub fn plan_round_network(net: &GameNetwork, neighbor_prob: f64, rng: &mut RngStream) -> RoundPlan {
    let n = net.n();
    let pairs = (0..n)
        .map(|i| {
            let nbrs = net.neighbors(i);
            assert!(
                !nbrs.is_empty(),
                "agent {i} is isolated in the game network"
            );
            let outside = n - 1 - nbrs.len();
            let trustee = if outside == 0 || rng.gen_bool(neighbor_prob) {
                *nbrs
                    .iter()
                    .nth(rng.gen_range(0..nbrs.len()))
                    .expect("index in range")
            } else {
                let k = rng.gen_range(0..outside);
                (0..n)
                    .filter(|&j| j != i && !nbrs.contains(&j))
                    .nth(k)
                    .expect("index in range")
            };
            (i, trustee)
        })
        .collect();
    RoundPlan { pairs }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Rewiring {
    pub drops: usize,
    pub adds: usize,
    pub repairs: usize,
    /// Edges present before or after the pass but not both.
    pub tie_changes: usize,
}

/// After-round rewiring. In seeded random order each agent drops its
/// worst-imaged neighbor (when a strict worst exists) and links to the agent
/// it has the best gossip about (positive reputation only), if not already
/// linked. Isolates left over are tied to one random other agent.
pub fn rewire_dynamic<S: Scalar>(
    net: &mut GameNetwork,
    images: &ImageMatrix<S>,
    reputations: &ReputationMatrix<S>,
    drop_nonnegative_worst: bool,
    rng: &mut RngStream,
) -> Rewiring {
    let n = net.n();
    let before = net.clone();
    let mut report = Rewiring::default();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    for &i in &order {
        let mut dropped = None;
        let mut worst: Option<(usize, S)> = None;
        let mut best_image: Option<S> = None;
        for &j in net.neighbors(i) {
            let v = images.get(i, j);
            if worst.is_none_or(|(_, w)| v < w) {
                worst = Some((j, v));
            }
            if best_image.is_none_or(|b| v > b) {
                best_image = Some(v);
            }
        }
        if let (Some((j, low)), Some(high)) = (worst, best_image) {
            if low < high && (drop_nonnegative_worst || low < S::zero()) {
                net.remove_edge(i, j);
                dropped = Some(j);
                report.drops += 1;
            }
        }

        let mut best: Option<(usize, S)> = None;
        for j in (0..n).filter(|&j| j != i && Some(j) != dropped) {
            let r = reputations.get(i, j);
            if r > S::zero() && best.is_none_or(|(_, b)| r > b) {
                best = Some((j, r));
            }
        }
        if let Some((j, _)) = best {
            if net.add_edge(i, j) {
                report.adds += 1;
            }
        }
    }

    for i in 0..n {
        if net.degree(i) == 0 {
            let j = uniform_other(n, i, rng);
            net.add_edge(i, j);
            report.repairs += 1;
        }
    }
    report.tie_changes = before.symmetric_difference(net);
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_agents_always_pair_with_each_other() {
        let mut rng = RngStream::new(3, "plan");
        for _ in 0..20 {
            let plan = plan_round_wellmixed(2, &mut rng);
            assert_eq!(plan.pairs(), &[(0, 1), (1, 0)]);
        }
    }

    #[test]
    fn never_trustee_closed_form() {
        // (1 - 1/N)^(rN - r) for N = 16, r = 10.
        let p = (1.0_f64 - 1.0 / 16.0).powi(10 * 16 - 10);
        assert!((p - 6.24e-5).abs() < 0.01e-5, "{p}");
    }

    #[test]
    fn generated_network_meets_min_degree() {
        let mut rng = RngStream::new(11, "game-network");
        for _ in 0..50 {
            let g = generate_game_network(16, 3, &mut rng).unwrap();
            assert!(g.degrees().iter().all(|&d| (3..=15).contains(&d)));
        }
    }

    #[test]
    fn saturated_degree_gives_complete_graph() {
        let g = generate_game_network(7, 6, &mut RngStream::new(1, "g")).unwrap();
        assert_eq!(g, GameNetwork::complete(7));
    }

    #[test]
    fn oversized_degree_is_a_config_error() {
        let err = generate_game_network(5, 5, &mut RngStream::new(1, "g")).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn unique_neighbor_is_forced_when_q_is_one() {
        let mut g = GameNetwork::new(4);
        g.add_edge(0, 1);
        g.add_edge(2, 3);
        let mut rng = RngStream::new(5, "plan");
        for _ in 0..50 {
            let plan = plan_round_network(&g, 1.0, &mut rng);
            assert_eq!(plan.trustee_of(0), 1);
            assert_eq!(plan.trustee_of(3), 2);
            assert!(plan.is_well_formed());
        }
    }

    #[test]
    #[should_panic(expected = "isolated")]
    fn isolates_are_a_contract_violation() {
        let mut g = GameNetwork::new(3);
        g.add_edge(0, 1);
        plan_round_network(&g, 0.95, &mut RngStream::new(1, "p"));
    }

    fn zero_state(n: usize) -> (ImageMatrix<f64>, ReputationMatrix<f64>) {
        (ImageMatrix::zeros(n), ReputationMatrix::zeros(n))
    }

    #[test]
    fn no_information_means_no_changes() {
        let (im, re) = zero_state(6);
        let mut g = generate_game_network(6, 2, &mut RngStream::new(2, "g")).unwrap();
        let before = g.clone();
        let r = rewire_dynamic(&mut g, &im, &re, true, &mut RngStream::new(2, "rw"));
        assert_eq!(r.tie_changes, 0);
        assert_eq!(g, before);
    }

    #[test]
    fn maximal_rewiring_changes_two_n_ties() {
        // Ring plus diameters on six nodes. Every agent dislikes its clockwise
        // ring neighbor and has heard well of the agent two steps ahead, so
        // all six ring edges go and six distinct chords arrive.
        let n = 6;
        let mut g = GameNetwork::new(n);
        for i in 0..n {
            g.add_edge(i, (i + 1) % n);
        }
        for i in 0..3 {
            g.add_edge(i, i + 3);
        }
        let (mut im, mut re) = zero_state(n);
        for i in 0..n {
            im.set(i, (i + 1) % n, -0.5);
            im.set(i, (i + n - 1) % n, 0.5);
            im.set(i, (i + 3) % n, 0.5);
            re.set(i, (i + 2) % n, 0.7);
        }
        let r = rewire_dynamic(&mut g, &im, &re, true, &mut RngStream::new(4, "rw"));
        assert_eq!(r.drops, n);
        assert_eq!(r.adds, n);
        assert_eq!(r.tie_changes, 2 * n);
        assert!(g.isolates().is_empty());
    }

    #[test]
    fn isolated_agent_gains_exactly_one_tie() {
        let n = 4;
        let mut g = GameNetwork::new(n);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        g.add_edge(2, 3);
        let (mut im, re) = zero_state(n);
        // Agent 1 drops agent 0 (its worst), leaving 0 isolated.
        im.set(1, 0, -0.4);
        im.set(1, 2, 0.4);
        let r = rewire_dynamic(&mut g, &im, &re, true, &mut RngStream::new(8, "rw"));
        assert_eq!(r.drops, 1);
        assert_eq!(r.repairs, 1);
        assert_eq!(g.degree(0), 1);
        assert!(g.isolates().is_empty());
    }

    #[test]
    fn equal_images_block_the_drop() {
        let mut g = GameNetwork::complete(4);
        let (mut im, re) = zero_state(4);
        for j in 1..4 {
            im.set(0, j, -0.3);
        }
        let r = rewire_dynamic(&mut g, &im, &re, true, &mut RngStream::new(1, "rw"));
        assert_eq!(r.tie_changes, 0);
    }

    #[test]
    fn nonnegative_worst_kept_when_knob_is_off() {
        let mut g = GameNetwork::complete(3);
        let (mut im, re) = zero_state(3);
        im.set(0, 1, 0.1);
        im.set(0, 2, 0.3);
        let r = rewire_dynamic(&mut g, &im, &re, false, &mut RngStream::new(1, "rw"));
        assert_eq!(r.drops, 0);
        let r = rewire_dynamic(&mut g, &im, &re, true, &mut RngStream::new(1, "rw"));
        assert_eq!(r.drops, 1);
        assert!(!g.has_edge(0, 1));
    }

    #[test]
    fn worst_ties_break_to_lowest_id() {
        let mut g = GameNetwork::complete(4);
        let (mut im, re) = zero_state(4);
        im.set(0, 1, 0.5);
        im.set(0, 2, -0.5);
        im.set(0, 3, -0.5);
        rewire_dynamic(&mut g, &im, &re, true, &mut RngStream::new(1, "rw"));
        assert!(!g.has_edge(0, 2));
        assert!(g.has_edge(0, 3));
    }
}
