//! One Trust Game interaction: decisions, payoffs and image updates.

use crate::agent::{AgentState, AgentType};
use crate::config::ActionRule;
use crate::matrix::ImageMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffParams<S> {
    pub stake: S,
    pub multiplier: S,
    pub return_fraction: S,
}

impl<S: Scalar> PayoffParams<S> {
    pub fn new(stake: S, multiplier: S, return_fraction: S) -> Self {
        assert!(stake > S::zero(), "stake must be positive");
        assert!(multiplier > S::one(), "multiplier must exceed 1");
        assert!(
            return_fraction >= S::zero() && return_fraction <= S::one(),
            "return fraction must lie in [0, 1]"
        );
        Self {
            stake,
            multiplier,
            return_fraction,
        }
    }

    /// Resources created by one cooperative transfer, `(m - 1) * k`.
    pub fn surplus(&self) -> S {
        (self.multiplier - S::one()) * self.stake
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TgOutcome<S> {
    pub trustor: usize,
    pub trustee: usize,
    pub trustor_cooperated: bool,
    pub trustee_returned: bool,
    pub trustor_delta: S,
    pub trustee_delta: S,
}

/// Trustor decision. Consumes leniency under rule III.
pub fn decide_trustor<S: Scalar>(
    agent: &mut AgentState<S>,
    partner: usize,
    perception: S,
    threshold: S,
    rule: ActionRule,
) -> bool {
    match (agent.agent_type, rule) {
        (AgentType::Cooperator, ActionRule::I | ActionRule::II) => perception >= threshold,
        (AgentType::Defector, ActionRule::I | ActionRule::II) => false,
        (AgentType::Cooperator, ActionRule::III) => {
            if perception >= threshold {
                return true;
            }
            let left = &mut agent.forgiveness_remaining[partner];
            if *left > 0 {
                *left -= 1;
                true
            } else {
                false
            }
        }
        (AgentType::Defector, ActionRule::III) => spend_kindness(agent),
    }
}

/// Trustee decision; only meaningful after the trustor cooperated.
pub fn decide_trustee<S: Scalar>(
    agent: &mut AgentState<S>,
    _partner: usize,
    trustor_cooperated: bool,
    perception: S,
    threshold: S,
    rule: ActionRule,
) -> bool {
    assert!(
        trustor_cooperated,
        "trustee decides only after a cooperative transfer"
    );
    match (agent.agent_type, rule) {
        (AgentType::Cooperator, ActionRule::I) => perception >= threshold,
        (AgentType::Cooperator, ActionRule::II | ActionRule::III) => true,
        (AgentType::Defector, ActionRule::I | ActionRule::II) => false,
        (AgentType::Defector, ActionRule::III) => spend_kindness(agent),
    }
}

fn spend_kindness<S>(agent: &mut AgentState<S>) -> bool {
    if agent.kindness_remaining > 0 {
        agent.kindness_remaining -= 1;
        true
    } else {
        false
    }
}

/// Settles one interaction and credits both agents. A trustor holding less
/// than the stake is forced to defect.
pub fn apply_payoffs<S: Scalar>(
    trustor: &mut AgentState<S>,
    trustee: &mut AgentState<S>,
    trustor_cooperates: bool,
    trustee_returns: bool,
    params: &PayoffParams<S>,
) -> TgOutcome<S> {
    let cooperated = trustor_cooperates && trustor.resources >= params.stake;
    let returned = cooperated && trustee_returns;
    let (trustor_delta, trustee_delta) = if !cooperated {
        (S::zero(), S::zero())
    } else {
        let transfer = params.multiplier * params.stake;
        let back = if returned {
            params.return_fraction * transfer
        } else {
            S::zero()
        };
        (back - params.stake, transfer - back)
    };
    trustor.resources += trustor_delta;
    trustee.resources += trustee_delta;
    TgOutcome {
        trustor: trustor.id,
        trustee: trustee.id,
        trustor_cooperated: cooperated,
        trustee_returned: returned,
        trustor_delta,
        trustee_delta,
    }
}

/// Direct-experience update for one interaction. The trustee always learns
/// about the trustor; the trustor learns about the trustee only when it
/// cooperated.
pub fn update_images<S: Scalar>(images: &mut ImageMatrix<S>, outcome: &TgOutcome<S>, step: S) {
    let signed = |good: bool| if good { step } else { -step };
    images.nudge(
        outcome.trustee,
        outcome.trustor,
        signed(outcome.trustor_cooperated),
    );
    if outcome.trustor_cooperated {
        images.nudge(
            outcome.trustor,
            outcome.trustee,
            signed(outcome.trustee_returned),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coop(id: usize) -> AgentState<f64> {
        AgentState::new(id, AgentType::Cooperator, 20.0, 4, 1)
    }

    fn defector(id: usize) -> AgentState<f64> {
        AgentState::new(id, AgentType::Defector, 20.0, 4, 2)
    }

    fn defaults() -> PayoffParams<f64> {
        PayoffParams::new(5.0, 3.0, 0.5)
    }

    #[test]
    fn threshold_is_inclusive() {
        assert!(decide_trustor(&mut coop(0), 1, 0.0, 0.0, ActionRule::I));
        assert!(!decide_trustor(&mut coop(0), 1, -0.01, 0.0, ActionRule::I));
    }

    #[test]
    fn defectors_never_trust_under_rules_one_and_two() {
        for rule in [ActionRule::I, ActionRule::II] {
            for p in [-1.0, 0.0, 1.0] {
                assert!(!decide_trustor(&mut defector(0), 1, p, -1.0, rule));
            }
        }
    }

    #[test]
    fn forgiveness_runs_out_per_partner() {
        let mut a = coop(0);
        assert!(decide_trustor(&mut a, 2, -0.5, 0.0, ActionRule::III));
        assert_eq!(a.forgiveness_remaining[2], 0);
        assert!(!decide_trustor(&mut a, 2, -0.5, 0.0, ActionRule::III));
        // Another partner has its own allowance.
        assert!(decide_trustor(&mut a, 3, -0.5, 0.0, ActionRule::III));
        // Above threshold nothing is consumed.
        let mut b = coop(0);
        assert!(decide_trustor(&mut b, 2, 0.5, 0.0, ActionRule::III));
        assert_eq!(b.forgiveness_remaining[2], 1);
    }

    #[test]
    fn defector_kindness_is_shared_across_roles() {
        let mut d = defector(0);
        assert!(decide_trustor(&mut d, 1, -1.0, 0.0, ActionRule::III));
        assert!(decide_trustee(&mut d, 2, true, -1.0, 0.0, ActionRule::III));
        assert!(!decide_trustor(&mut d, 1, 1.0, 0.0, ActionRule::III));
        assert!(!decide_trustee(&mut d, 1, true, 1.0, 0.0, ActionRule::III));
        assert_eq!(d.kindness_remaining, 0);
    }

    #[test]
    fn trustee_rules() {
        assert!(decide_trustee(
            &mut coop(0),
            1,
            true,
            -0.9,
            0.0,
            ActionRule::II
        ));
        assert!(decide_trustee(
            &mut coop(0),
            1,
            true,
            -0.9,
            0.0,
            ActionRule::III
        ));
        assert!(!decide_trustee(
            &mut defector(0),
            1,
            true,
            1.0,
            0.0,
            ActionRule::I
        ));
        assert!(!decide_trustee(
            &mut coop(0),
            1,
            true,
            -0.1,
            0.0,
            ActionRule::I
        ));
        assert!(decide_trustee(
            &mut coop(0),
            1,
            true,
            0.0,
            0.0,
            ActionRule::I
        ));
    }

    #[test]
    #[should_panic(expected = "cooperative transfer")]
    fn trustee_without_transfer_is_a_contract_violation() {
        decide_trustee(&mut coop(0), 1, false, 0.0, 0.0, ActionRule::I);
    }

    #[test]
    fn payoff_tree_with_default_parameters() {
        let (mut a, mut b) = (coop(0), coop(1));
        let o = apply_payoffs(&mut a, &mut b, true, true, &defaults());
        assert_eq!((o.trustor_delta, o.trustee_delta), (2.5, 7.5));
        assert_eq!((a.resources, b.resources), (22.5, 27.5));

        let (mut a, mut b) = (coop(0), defector(1));
        let o = apply_payoffs(&mut a, &mut b, true, false, &defaults());
        assert_eq!((o.trustor_delta, o.trustee_delta), (-5.0, 15.0));

        let (mut a, mut b) = (defector(0), coop(1));
        let o = apply_payoffs(&mut a, &mut b, false, true, &defaults());
        assert_eq!((o.trustor_delta, o.trustee_delta), (0.0, 0.0));
        assert!(!o.trustee_returned);
    }

    #[test]
    fn broke_trustor_is_forced_to_defect() {
        let (mut a, mut b) = (coop(0), coop(1));
        a.resources = 4.0;
        let o = apply_payoffs(&mut a, &mut b, true, true, &defaults());
        assert!(!o.trustor_cooperated);
        assert_eq!(a.resources, 4.0);
    }

    #[test]
    fn surplus_identity_holds_for_any_return_fraction() {
        for rho in [0.0, 0.25, 0.5, 1.0] {
            let params = PayoffParams::new(5.0, 3.0, rho);
            for ret in [false, true] {
                let (mut a, mut b) = (coop(0), coop(1));
                let o = apply_payoffs(&mut a, &mut b, true, ret, &params);
                assert!((o.trustor_delta + o.trustee_delta - params.surplus()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn image_updates_follow_the_interaction() {
        let mut im = ImageMatrix::<f64>::zeros(3);
        im.set(1, 0, 0.3);
        let o = TgOutcome {
            trustor: 0,
            trustee: 1,
            trustor_cooperated: true,
            trustee_returned: false,
            trustor_delta: -5.0,
            trustee_delta: 15.0,
        };
        update_images(&mut im, &o, 0.1);
        assert!((im.get(1, 0) - 0.4).abs() < 1e-12);
        assert!((im.get(0, 1) + 0.1).abs() < 1e-12);

        let mut sat = ImageMatrix::<f64>::zeros(2);
        sat.set(1, 0, 1.0);
        update_images(&mut sat, &o, 0.1);
        assert_eq!(sat.get(1, 0), 1.0);

        let defect = TgOutcome {
            trustor_cooperated: false,
            trustee_returned: false,
            trustor_delta: 0.0,
            trustee_delta: 0.0,
            ..o
        };
        let mut im = ImageMatrix::<f64>::zeros(3);
        update_images(&mut im, &defect, 0.1);
        assert_eq!(im.get(0, 1), 0.0);
        assert!((im.get(1, 0) + 0.1).abs() < 1e-12);
    }
}
