//! Run configuration.
//!
//! `SimConfig` is a flat JSON document. Every field has a default, so a
//! config file only needs the fields it changes; unknown keys are rejected so
//! a typo in a sweep grid cannot silently fall back to a default.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionRule {
    /// Conditional cooperation as trustor and trustee; defectors always cheat.
    #[serde(alias = "1")]
    I,
    /// Rule I plus blind reciprocity for cooperators.
    #[serde(alias = "2")]
    II,
    /// Rule II plus leniency periods for both types.
    #[serde(alias = "3")]
    III,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    WellMixed,
    StaticNetwork,
    DynamicNetwork,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GossipMechanism {
    Parallel,
    Simple,
    Triadic,
}

impl Regime {
    pub fn uses_network(self) -> bool {
        !matches!(self, Regime::WellMixed)
    }
}

impl GossipMechanism {
    pub fn is_diffusive(self) -> bool {
        !matches!(self, GossipMechanism::Parallel)
    }
}

macro_rules! display_via_serde {
    ($($t:ty),*) => {$(
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match serde_json::to_value(self) {
                    Ok(Value::String(s)) => f.write_str(&s),
                    _ => write!(f, "{self:?}"),
                }
            }
        }
    )*};
}
display_via_serde!(ActionRule, Regime, GossipMechanism);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_agents: usize,
    pub endowment: f64,
    pub defector_fraction: f64,
    /// Cooperation threshold on perception, inclusive.
    pub cooperation_threshold: f64,
    pub action_rule: ActionRule,
    pub regime: Regime,
    pub gossip_mechanism: GossipMechanism,
    /// Weight of incoming gossip against the receiver's current reputation entry.
    pub omega: f64,
    /// Weight of direct experience in perception; the remainder goes to reputation.
    pub image_weight: f64,
    pub multiplier: f64,
    pub stake: f64,
    pub return_fraction: f64,
    pub image_step: f64,
    /// Main-phase gossip steps. A TG round is played every `total_steps / tg_rounds` steps.
    pub total_steps: u64,
    pub tg_rounds: u64,
    pub burnin_rounds: u64,
    pub gossip_budget: u64,
    /// Steps each gossip piece may live; `None` derives `total_steps / (tg_rounds * gossip_budget)`.
    pub piece_lifespan: Option<u64>,
    pub neighbor_play_prob: f64,
    pub min_degree: usize,
    pub leniency_length: u32,
    pub seed: u64,
    pub triadic_table_path: Option<PathBuf>,
    /// Edge-list CSV for the gossip network; a synthetic network is generated when absent.
    pub signed_network_path: Option<PathBuf>,
    pub signed_pos_density: f64,
    pub signed_neg_density: f64,
    /// Reset resources (not images or reputations) to the endowment when burn-in ends.
    pub reset_resources_after_burnin: bool,
    /// Drop the worst-imaged neighbor even when its image is non-negative.
    pub drop_nonnegative_worst: bool,
    /// Permit single-type populations.
    pub allow_degenerate: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_agents: 16,
            endowment: 20.0,
            defector_fraction: 0.25,
            cooperation_threshold: 0.0,
            action_rule: ActionRule::I,
            regime: Regime::WellMixed,
            gossip_mechanism: GossipMechanism::Triadic,
            omega: 0.3,
            image_weight: 0.5,
            multiplier: 3.0,
            stake: 5.0,
            return_fraction: 0.5,
            image_step: 0.1,
            total_steps: 1000,
            tg_rounds: 10,
            burnin_rounds: 2,
            gossip_budget: 10,
            piece_lifespan: None,
            neighbor_play_prob: 0.95,
            min_degree: 3,
            leniency_length: 3,
            seed: 0,
            triadic_table_path: None,
            signed_network_path: None,
            signed_pos_density: 0.2,
            signed_neg_density: 0.1,
            reset_resources_after_burnin: true,
            drop_nonnegative_worst: true,
            allow_degenerate: false,
        }
    }
}

fn unit_interval(field: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::config(field, format!("{value} is outside [0, 1]")))
    }
}

impl SimConfig {
    pub fn defector_count(&self) -> usize {
        (self.defector_fraction * self.n_agents as f64).round() as usize
    }

    /// Gossip steps between consecutive TG rounds.
    pub fn steps_per_round(&self) -> u64 {
        self.total_steps / self.tg_rounds.max(1)
    }

    pub fn effective_lifespan(&self) -> u64 {
        self.piece_lifespan.unwrap_or_else(|| {
            self.steps_per_round()
                .checked_div(self.gossip_budget)
                .unwrap_or(0)
        })
    }

    pub fn total_rounds(&self) -> u64 {
        self.burnin_rounds + self.tg_rounds
    }

    pub fn validate(&self) -> Result<()> {
        if !(3..=10_000).contains(&self.n_agents) {
            return Err(Error::config(
                "n_agents",
                format!("{} is outside 3..=10000", self.n_agents),
            ));
        }
        for (field, v) in [
            ("endowment", self.endowment),
            ("defector_fraction", self.defector_fraction),
            ("cooperation_threshold", self.cooperation_threshold),
            ("omega", self.omega),
            ("image_weight", self.image_weight),
            ("multiplier", self.multiplier),
            ("stake", self.stake),
            ("return_fraction", self.return_fraction),
            ("image_step", self.image_step),
            ("neighbor_play_prob", self.neighbor_play_prob),
            ("signed_pos_density", self.signed_pos_density),
            ("signed_neg_density", self.signed_neg_density),
        ] {
            if !v.is_finite() {
                return Err(Error::config(field, "must be finite"));
            }
        }
        if self.endowment < 0.0 {
            return Err(Error::config("endowment", "must be non-negative"));
        }
        unit_interval("defector_fraction", self.defector_fraction)?;
        if !(-1.0..=1.0).contains(&self.cooperation_threshold) {
            return Err(Error::config(
                "cooperation_threshold",
                format!("{} is outside [-1, 1]", self.cooperation_threshold),
            ));
        }
        unit_interval("omega", self.omega)?;
        unit_interval("image_weight", self.image_weight)?;
        unit_interval("return_fraction", self.return_fraction)?;
        unit_interval("neighbor_play_prob", self.neighbor_play_prob)?;
        unit_interval("signed_pos_density", self.signed_pos_density)?;
        unit_interval("signed_neg_density", self.signed_neg_density)?;
        if self.signed_pos_density + self.signed_neg_density > 1.0 {
            return Err(Error::config(
                "signed_neg_density",
                "positive and negative densities sum above 1",
            ));
        }
        if self.multiplier <= 1.0 {
            return Err(Error::config("multiplier", "must exceed 1"));
        }
        if self.stake <= 0.0 {
            return Err(Error::config("stake", "must be positive"));
        }
        if !(self.image_step > 0.0 && self.image_step <= 1.0) {
            return Err(Error::config("image_step", "must lie in (0, 1]"));
        }
        if self.tg_rounds == 0 {
            return Err(Error::config("tg_rounds", "must be at least 1"));
        }
        if !self.total_steps.is_multiple_of(self.tg_rounds) {
            return Err(Error::config(
                "total_steps",
                format!(
                    "{} is not a multiple of tg_rounds ({})",
                    self.total_steps, self.tg_rounds
                ),
            ));
        }
        if self.gossip_mechanism.is_diffusive() {
            if self.total_steps < self.tg_rounds * self.gossip_budget {
                return Err(Error::config(
                    "total_steps",
                    format!(
                        "{} steps cannot host {} pieces in each of {} rounds",
                        self.total_steps, self.gossip_budget, self.tg_rounds
                    ),
                ));
            }
            if self.piece_lifespan == Some(0) && self.gossip_budget > 0 {
                return Err(Error::config("piece_lifespan", "must be at least 1"));
            }
            if self.gossip_budget * self.effective_lifespan() > self.steps_per_round() {
                return Err(Error::config(
                    "piece_lifespan",
                    format!(
                        "{} pieces x {} steps exceed the {} steps between rounds",
                        self.gossip_budget,
                        self.effective_lifespan(),
                        self.steps_per_round()
                    ),
                ));
            }
        }
        if self.regime.uses_network() && !(1..self.n_agents).contains(&self.min_degree) {
            return Err(Error::config(
                "min_degree",
                format!("{} is outside 1..={}", self.min_degree, self.n_agents - 1),
            ));
        }
        if !self.allow_degenerate {
            let d = self.defector_count();
            if d == 0 || d >= self.n_agents {
                return Err(Error::config(
                    "defector_fraction",
                    format!(
                        "{} yields {d} defectors among {} agents; a mixed population is required \
                         (set allow_degenerate to permit this)",
                        self.defector_fraction, self.n_agents
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| {
            let message = e.to_string();
            let field = message
                .split('`')
                .nth(1)
                .map(str::to_owned)
                .unwrap_or_else(|| "<document>".to_owned());
            Error::Config { field, message }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_map(&self) -> Map<String, Value> {
        match serde_json::to_value(self) {
            Ok(Value::Object(map)) => map,
            _ => unreachable!("SimConfig serializes to an object"),
        }
    }

    /// Returns a copy with `overrides` merged in; every key must name a field.
    pub fn with_overrides(&self, overrides: &Map<String, Value>) -> Result<Self> {
        let mut map = self.to_json_map();
        for (key, value) in overrides {
            if !map.contains_key(key) {
                return Err(Error::config(key, "unknown configuration field"));
            }
            map.insert(key.clone(), value.clone());
        }
        Self::from_value(Value::Object(map)).map_err(|e| match e {
            Error::Config { field, message } if field == "<document>" => {
                let keys: Vec<&str> = overrides.keys().map(String::as_str).collect();
                Error::config(keys.join(","), message)
            }
            other => other,
        })
    }

    /// Reads a single config field by name, for grouping and reporting.
    pub fn field(&self, name: &str) -> Option<Value> {
        self.to_json_map().remove(name)
    }
}

/// Parses `key=value` override text. Values are JSON when they parse as
/// JSON, otherwise bare strings (`gossip_mechanism=parallel`).
pub fn parse_override(text: &str) -> Result<(String, Value)> {
    let (key, raw) = text
        .split_once('=')
        .ok_or_else(|| Error::config(text, "override must look like key=value"))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    Ok((key.to_owned(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = SimConfig::default();
        c.validate().unwrap();
        assert_eq!(c.effective_lifespan(), 10);
        assert_eq!(c.steps_per_round(), 100);
        assert_eq!(c.total_rounds(), 12);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = SimConfig::from_json_str(r#"{"n_agentz": 20}"#).unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "n_agentz"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn partial_document_fills_defaults() {
        let c = SimConfig::from_json_str(r#"{"n_agents": 20, "action_rule": "III"}"#).unwrap();
        assert_eq!(c.n_agents, 20);
        assert_eq!(c.action_rule, ActionRule::III);
        assert_eq!(c.stake, 5.0);
    }

    #[test]
    fn json_round_trip() {
        let c = SimConfig {
            regime: Regime::DynamicNetwork,
            piece_lifespan: Some(7),
            ..SimConfig::default()
        };
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(SimConfig::from_json_str(&text).unwrap(), c);
    }

    #[test]
    fn overrides_apply_and_name_bad_fields() {
        let (k, v) = parse_override("gossip_mechanism=parallel").unwrap();
        let mut m = Map::new();
        m.insert(k, v);
        let c = SimConfig::default().with_overrides(&m).unwrap();
        assert_eq!(c.gossip_mechanism, GossipMechanism::Parallel);

        let mut bad = Map::new();
        bad.insert("bogus".into(), Value::from(1));
        let err = SimConfig::default().with_overrides(&bad).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "bogus"));
    }

    #[test]
    fn single_type_population_needs_opt_in() {
        let mut c = SimConfig {
            defector_fraction: 1.0,
            ..SimConfig::default()
        };
        let err = c.validate().unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "defector_fraction"));
        c.allow_degenerate = true;
        c.validate().unwrap();
    }

    #[test]
    fn range_violations_name_their_field() {
        let cases: Vec<(&str, SimConfig)> = vec![
            (
                "omega",
                SimConfig {
                    omega: 1.5,
                    ..Default::default()
                },
            ),
            (
                "cooperation_threshold",
                SimConfig {
                    cooperation_threshold: -2.0,
                    ..Default::default()
                },
            ),
            (
                "multiplier",
                SimConfig {
                    multiplier: 1.0,
                    ..Default::default()
                },
            ),
            (
                "total_steps",
                SimConfig {
                    total_steps: 50,
                    ..Default::default()
                },
            ),
            (
                "min_degree",
                SimConfig {
                    regime: Regime::StaticNetwork,
                    min_degree: 16,
                    ..Default::default()
                },
            ),
            (
                "n_agents",
                SimConfig {
                    n_agents: 2,
                    ..Default::default()
                },
            ),
        ];
        for (field, c) in cases {
            match c.validate() {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{field}: expected config error, got {other:?}"),
            }
        }
    }

    #[test]
    fn display_uses_wire_names() {
        assert_eq!(Regime::DynamicNetwork.to_string(), "dynamic_network");
        assert_eq!(ActionRule::II.to_string(), "II");
        assert_eq!(GossipMechanism::Simple.to_string(), "simple");
    }
}
