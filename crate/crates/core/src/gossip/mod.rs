//! Reputation spreading: the parallel (perfect information) baseline and
//! single-piece cascades over the signed network, either unconditional
//! (simple diffusion) or gated by the triadic table.

mod table;

use std::collections::BTreeSet;

use rand::Rng;

pub use table::{
    default_rule, default_table_checksum, Relation, Situation, TriadConfig, TriadicTable, Valence,
    DEFAULT_TABLE_CSV, TABLE_SIZE,
};

use crate::matrix::{ImageMatrix, ReputationMatrix};
use crate::network::SignedNetwork;
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Everyone's reputation of `j` becomes the population mean of direct
/// images of `j`, so each column of the result is constant off the diagonal.
pub fn parallel_update<S: Scalar>(images: &ImageMatrix<S>) -> ReputationMatrix<S> {
    let n = images.n();
    let mut reps = ReputationMatrix::zeros(n);
    if n < 2 {
        return reps;
    }
    let others = S::of((n - 1) as f64);
    for j in 0..n {
        let total: S = (0..n).filter(|&k| k != j).map(|k| images.get(k, j)).sum();
        let mean = total / others;
        for i in (0..n).filter(|&i| i != j) {
            reps.set(i, j, mean);
        }
    }
    reps
}

#[derive(Debug, Clone, PartialEq)]
pub struct GossipPiece<S> {
    pub target: usize,
    /// Originator's image of the target at emission; never altered in transit.
    pub payload: S,
    pub originator: usize,
    pub valence: Valence,
    pub steps_remaining: u64,
    /// Informed agents able to forward, in the order they were reached.
    pub frontier: Vec<usize>,
    pub informed: BTreeSet<usize>,
}

impl<S: Scalar> GossipPiece<S> {
    pub fn new(originator: usize, target: usize, payload: S, lifespan: u64) -> Self {
        assert_ne!(originator, target, "agents do not gossip about themselves");
        Self {
            target,
            payload,
            originator,
            valence: Valence::of(payload),
            steps_remaining: lifespan,
            frontier: vec![originator],
            informed: BTreeSet::from([originator]),
        }
    }

    pub fn is_finished(&self) -> bool {
        self.steps_remaining == 0
    }
}

/// Draws up to `budget` pieces. Originators are agents with at least one
/// signed tie and at least one non-zero image; the target is a uniformly
/// random agent the originator holds a non-zero image of.
pub fn emit_pieces<S: Scalar>(
    images: &ImageMatrix<S>,
    net: &SignedNetwork,
    budget: u64,
    lifespan: u64,
    rng: &mut RngStream,
) -> Vec<GossipPiece<S>> {
    let n = images.n();
    let opinions = |o: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| j != o && !images.get(o, j).is_zero())
            .collect()
    };
    let speakers: Vec<usize> = (0..n)
        .filter(|&o| net.degree(o) > 0 && !opinions(o).is_empty())
        .collect();
    if speakers.is_empty() {
        return Vec::new();
    }
    (0..budget)
        .map(|_| {
            let o = speakers[rng.gen_range(0..speakers.len())];
            let targets = opinions(o);
            let t = targets[rng.gen_range(0..targets.len())];
            GossipPiece::new(o, t, images.get(o, t), lifespan)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Transmitted {
        sender: usize,
        receiver: usize,
    },
    Declined {
        sender: usize,
        receiver: usize,
    },
    /// No informed agent has an uninformed neighbor left; the piece is done.
    Exhausted,
}

/// One dyadic exchange: a random informed sender with something left to
/// tell picks a random uninformed neighbor (never the target) and `decide`
/// rules on transmission. A successful receiver folds the payload into its
/// reputation of the target with weight `omega`. Each exchange consumes one
/// step whether or not the message passes.
pub fn gossip_step<S, F>(
    piece: &mut GossipPiece<S>,
    net: &SignedNetwork,
    decide: F,
    reputations: &mut ReputationMatrix<S>,
    omega: S,
    rng: &mut RngStream,
) -> StepOutcome
where
    S: Scalar,
    F: Fn(TriadConfig, Valence) -> bool,
{
    assert!(piece.steps_remaining > 0, "piece has no steps left");
    let target = piece.target;
    let audience = |s: usize| -> Vec<usize> {
        net.neighbors(s)
            .map(|(r, _)| r)
            .filter(|r| *r != target && !piece.informed.contains(r))
            .collect()
    };
    let senders: Vec<usize> = piece
        .frontier
        .iter()
        .copied()
        .filter(|&s| !audience(s).is_empty())
        .collect();
    if senders.is_empty() {
        piece.steps_remaining = 0;
        return StepOutcome::Exhausted;
    }
    let sender = senders[rng.gen_range(0..senders.len())];
    let receivers = audience(sender);
    let receiver = receivers[rng.gen_range(0..receivers.len())];

    let triad = TriadConfig {
        sender_receiver: net
            .sign(sender, receiver)
            .expect("gossip flows along signed ties only"),
        sender_target: net.sign(sender, target).into(),
        receiver_target: net.sign(receiver, target).into(),
    };
    piece.steps_remaining -= 1;
    if decide(triad, piece.valence) {
        reputations.absorb(receiver, target, piece.payload, omega);
        piece.informed.insert(receiver);
        piece.frontier.push(receiver);
        StepOutcome::Transmitted { sender, receiver }
    } else {
        StepOutcome::Declined { sender, receiver }
    }
}

pub fn triadic_step<S: Scalar>(
    piece: &mut GossipPiece<S>,
    net: &SignedNetwork,
    table: &TriadicTable,
    reputations: &mut ReputationMatrix<S>,
    omega: S,
    rng: &mut RngStream,
) -> StepOutcome {
    gossip_step(
        piece,
        net,
        |t, v| table.transmits(t, v),
        reputations,
        omega,
        rng,
    )
}

pub fn simple_step<S: Scalar>(
    piece: &mut GossipPiece<S>,
    net: &SignedNetwork,
    reputations: &mut ReputationMatrix<S>,
    omega: S,
    rng: &mut RngStream,
) -> StepOutcome {
    gossip_step(piece, net, |_, _| true, reputations, omega, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Sign;

    fn path(n: usize) -> SignedNetwork {
        let mut g = SignedNetwork::new(n);
        for i in 0..n - 1 {
            g.add_edge(i, i + 1, Sign::Positive).unwrap();
        }
        g
    }

    #[test]
    fn parallel_zero_images_give_zero_reputations() {
        let r = parallel_update(&ImageMatrix::<f64>::zeros(5));
        assert!(r.is_all_zero());
    }

    #[test]
    fn parallel_averages_column() {
        let mut im = ImageMatrix::<f64>::zeros(3);
        im.set(1, 0, 0.2);
        im.set(2, 0, -0.4);
        let r = parallel_update(&im);
        assert!((r.get(1, 0) + 0.1).abs() < 1e-12);
        assert_eq!(r.get(1, 0), r.get(2, 0));
        assert_eq!(r.get(0, 0), 0.0);
    }

    #[test]
    fn no_opinions_no_pieces() {
        let im = ImageMatrix::<f64>::zeros(4);
        let pieces = emit_pieces(&im, &path(4), 10, 10, &mut RngStream::new(1, "g"));
        assert!(pieces.is_empty());
    }

    #[test]
    fn budget_is_filled_and_payload_frozen() {
        let mut im = ImageMatrix::<f64>::zeros(5);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    im.set(i, j, 0.1 * (i as f64 - j as f64) / 4.0 + 0.05);
                }
            }
        }
        let pieces = emit_pieces(&im, &path(5), 10, 7, &mut RngStream::new(2, "g"));
        assert_eq!(pieces.len(), 10);
        for p in &pieces {
            assert_eq!(p.payload, im.get(p.originator, p.target));
            assert_eq!(p.steps_remaining, 7);
            assert_eq!(p.frontier, vec![p.originator]);
            assert_eq!(p.valence == Valence::Negative, p.payload < 0.0);
        }
    }

    #[test]
    fn speakers_need_a_signed_tie() {
        let mut im = ImageMatrix::<f64>::zeros(4);
        im.set(3, 0, 0.5);
        let mut g = SignedNetwork::new(4);
        g.add_edge(0, 1, Sign::Positive).unwrap();
        // Agent 3 has an opinion but no ties.
        assert!(emit_pieces(&im, &g, 5, 5, &mut RngStream::new(1, "g")).is_empty());
    }

    #[test]
    fn eq2_update_on_transmission() {
        // Triangle of friends, target 2, sender 0 with a negative payload.
        let mut g = SignedNetwork::new(4);
        g.add_edge(0, 1, Sign::Positive).unwrap();
        g.add_edge(1, 3, Sign::Positive).unwrap();
        let mut reps = ReputationMatrix::<f64>::zeros(4);
        let mut piece = GossipPiece::new(0, 2, -0.5, 1);
        let out = triadic_step(
            &mut piece,
            &g,
            &TriadicTable::default(),
            &mut reps,
            0.3,
            &mut RngStream::new(1, "g"),
        );
        assert_eq!(
            out,
            StepOutcome::Transmitted {
                sender: 0,
                receiver: 1
            }
        );
        assert!((reps.get(1, 2) + 0.15).abs() < 1e-12);
        assert!(piece.is_finished());
    }

    #[test]
    fn declined_exchange_still_costs_a_step() {
        let mut g = SignedNetwork::new(3);
        g.add_edge(0, 1, Sign::Negative).unwrap();
        let mut reps = ReputationMatrix::<f64>::zeros(3);
        let mut piece = GossipPiece::new(0, 2, 0.4, 3);
        let out = triadic_step(
            &mut piece,
            &g,
            &TriadicTable::default(),
            &mut reps,
            0.3,
            &mut RngStream::new(1, "g"),
        );
        assert_eq!(
            out,
            StepOutcome::Declined {
                sender: 0,
                receiver: 1
            }
        );
        assert_eq!(piece.steps_remaining, 2);
        assert!(reps.is_all_zero());
    }

    #[test]
    fn simple_diffusion_covers_a_path() {
        // Breadth-first oracle: on a path every node is reachable and each
        // step can inform exactly one new node, so lifespan n-1 suffices.
        let n = 5;
        let g = path(n);
        let mut reps = ReputationMatrix::<f64>::zeros(n + 1);
        let mut full = SignedNetwork::new(n + 1);
        for (a, b, s) in g.edges() {
            full.add_edge(a, b, s).unwrap();
        }
        // Target n is off the path, so every path node is eligible.
        let mut piece = GossipPiece::new(0, n, 0.6, (n - 1) as u64);
        let mut rng = RngStream::new(3, "g");
        while !piece.is_finished() {
            simple_step(&mut piece, &full, &mut reps, 0.5, &mut rng);
        }
        let expected: BTreeSet<usize> = full.reachable_from(0);
        assert_eq!(piece.informed, expected);
        for i in 1..n {
            assert!((reps.get(i, n) - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn target_is_never_informed() {
        let mut g = SignedNetwork::new(3);
        g.add_edge(0, 1, Sign::Positive).unwrap();
        g.add_edge(1, 2, Sign::Positive).unwrap();
        let mut reps = ReputationMatrix::<f64>::zeros(3);
        let mut piece = GossipPiece::new(0, 1, 0.5, 5);
        let out = simple_step(&mut piece, &g, &mut reps, 0.5, &mut RngStream::new(1, "g"));
        assert_eq!(out, StepOutcome::Exhausted);
        assert!(!piece.informed.contains(&1));
        assert!(piece.is_finished());
    }

    #[test]
    fn all_yes_table_matches_simple_diffusion() {
        let mut g = SignedNetwork::new(8);
        let mut rng = RngStream::new(10, "net");
        for a in 0..8 {
            for b in a + 1..8 {
                let x: f64 = rng.gen();
                if x < 0.3 {
                    g.add_edge(a, b, Sign::Positive).unwrap();
                } else if x < 0.5 {
                    g.add_edge(a, b, Sign::Negative).unwrap();
                }
            }
        }
        let table = TriadicTable::all_yes();
        let mut r1 = ReputationMatrix::<f64>::zeros(8);
        let mut r2 = ReputationMatrix::<f64>::zeros(8);
        let mut p1 = GossipPiece::new(0, 5, -0.3, 12);
        let mut p2 = p1.clone();
        let mut g1 = RngStream::new(77, "gossip");
        let mut g2 = RngStream::new(77, "gossip");
        while !p1.is_finished() {
            let a = triadic_step(&mut p1, &g, &table, &mut r1, 0.3, &mut g1);
            let b = simple_step(&mut p2, &g, &mut r2, 0.3, &mut g2);
            assert_eq!(a, b);
        }
        assert_eq!(p1, p2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn zero_omega_leaves_reputation_untouched() {
        let g = path(4);
        let mut reps = ReputationMatrix::<f64>::zeros(5);
        let mut full = SignedNetwork::new(5);
        for (a, b, s) in g.edges() {
            full.add_edge(a, b, s).unwrap();
        }
        let mut piece = GossipPiece::new(0, 4, -0.8, 3);
        let mut rng = RngStream::new(3, "g");
        while !piece.is_finished() {
            simple_step(&mut piece, &full, &mut reps, 0.0, &mut rng);
        }
        assert!(reps.is_all_zero());
        assert_eq!(piece.informed.len(), 4);
    }
}
