//! Outcome indicators for single runs and condition-level aggregates.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agent::{AgentState, AgentType};
use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    BurnIn,
    Main,
}

/// State at the end of one TG round (after gossip and rewiring).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundSnapshot {
    pub round: u64,
    pub phase: Phase,
    pub resources: Vec<f64>,
    pub cooperations: u64,
    pub returns: u64,
    pub tie_changes: u64,
    pub gossip_pieces: u64,
    pub gossip_transmissions: u64,
    pub gossip_declines: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentOutcome {
    pub id: usize,
    pub agent_type: AgentType,
    pub resources: f64,
}

/// Resource statistics over the final population. Group fields are `None`
/// when only one type is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceSummary {
    pub mean_c: Option<f64>,
    pub mean_d: Option<f64>,
    pub mean_all: f64,
    /// Population standard deviation over all agents.
    pub sd_all: f64,
    /// `(mean_c - mean_d) / sd_all`, or 0 for degenerate runs.
    pub relative_difference: Option<f64>,
    pub absolute_difference: Option<f64>,
    pub c_win: Option<bool>,
    /// Every agent ended with the same resources (`sd_all == 0`).
    pub degenerate: bool,
    pub total_resources: f64,
}

pub fn summarize<S: Scalar>(agents: &[AgentState<S>]) -> ResourceSummary {
    let n = agents.len();
    assert!(n > 0, "cannot summarize an empty population");
    let mean = |xs: &[S]| -> Option<S> {
        if xs.is_empty() {
            None
        } else {
            Some(xs.iter().copied().sum::<S>() / S::of(xs.len() as f64))
        }
    };
    let all: Vec<S> = agents.iter().map(|a| a.resources).collect();
    let by_type = |t: AgentType| -> Vec<S> {
        agents
            .iter()
            .filter(|a| a.agent_type == t)
            .map(|a| a.resources)
            .collect()
    };
    let mean_all = mean(&all).expect("non-empty");
    let var = all
        .iter()
        .map(|&x| (x - mean_all) * (x - mean_all))
        .sum::<S>()
        / S::of(n as f64);
    let sd_all = var.sqrt();
    let degenerate = sd_all.is_zero();
    let mean_c = mean(&by_type(AgentType::Cooperator));
    let mean_d = mean(&by_type(AgentType::Defector));

    let (relative_difference, absolute_difference, c_win) = match (mean_c, mean_d) {
        (Some(c), Some(d)) => {
            let gap = c - d;
            let rel = if degenerate { S::zero() } else { gap / sd_all };
            (Some(rel.widen()), Some(gap.abs().widen()), Some(c > d))
        }
        _ => (None, None, None),
    };
    ResourceSummary {
        mean_c: mean_c.map(Scalar::widen),
        mean_d: mean_d.map(Scalar::widen),
        mean_all: mean_all.widen(),
        sd_all: sd_all.widen(),
        relative_difference,
        absolute_difference,
        c_win,
        degenerate,
        total_resources: all.iter().copied().sum::<S>().widen(),
    }
}

/// Everything one run emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: SimConfig,
    pub agents: Vec<AgentOutcome>,
    #[serde(flatten)]
    pub summary: ResourceSummary,
    /// Cooperative transfers inside the accounting window (after burn-in
    /// when resources are reset, otherwise all of them).
    pub accounted_cooperations: u64,
    pub total_cooperations: u64,
    pub rounds_played: u64,
    pub gossip_steps: u64,
    pub gossip_transmissions: u64,
    pub gossip_declines: u64,
    pub tie_changes: Vec<u64>,
    pub rounds: Vec<RoundSnapshot>,
}

impl RunRecord {
    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Ordering-friendly group key component.
#[derive(Debug, Clone, PartialEq)]
enum KeyPart {
    Num(f64),
    Text(String),
}

impl KeyPart {
    fn from_value(v: &Value) -> Self {
        match v {
            Value::Number(x) => KeyPart::Num(x.as_f64().unwrap_or(f64::NAN)),
            Value::String(s) => KeyPart::Text(s.clone()),
            Value::Null => KeyPart::Text(String::new()),
            other => KeyPart::Text(other.to_string()),
        }
    }

    fn render(&self) -> String {
        match self {
            KeyPart::Num(x) => x.to_string(),
            KeyPart::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct GroupKey(Vec<KeyPart>);

impl Eq for GroupKey {}

impl Ord for GroupKey {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            let o = match (a, b) {
                (KeyPart::Num(x), KeyPart::Num(y)) => x.total_cmp(y),
                (KeyPart::Num(_), KeyPart::Text(_)) => Ordering::Less,
                (KeyPart::Text(_), KeyPart::Num(_)) => Ordering::Greater,
                (KeyPart::Text(x), KeyPart::Text(y)) => x.cmp(y),
            };
            if o != Ordering::Equal {
                return o;
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl PartialOrd for GroupKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub key: Vec<String>,
    pub runs: usize,
    pub mixed_runs: usize,
    pub c_wins: usize,
    pub c_win_rate: Option<f64>,
    pub relative_difference_mean: Option<f64>,
    pub relative_difference_sd: Option<f64>,
    pub absolute_difference_mean: Option<f64>,
    pub total_resources_mean: f64,
    pub sd_all_mean: f64,
    pub mean_c_mean: Option<f64>,
    pub mean_d_mean: Option<f64>,
    pub degenerate_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateTable {
    pub group_by: Vec<String>,
    pub rows: Vec<AggregateRow>,
    pub warnings: Vec<String>,
}

pub const AGGREGATE_COLUMNS: [&str; 12] = [
    "runs",
    "mixed_runs",
    "c_wins",
    "c_win_rate",
    "relative_difference_mean",
    "relative_difference_sd",
    "absolute_difference_mean",
    "total_resources_mean",
    "sd_all_mean",
    "mean_c_mean",
    "mean_d_mean",
    "degenerate_runs",
];

/// Mean and population SD of `xs`, summed in sorted order so the result
/// does not depend on input order.
fn moments(mut xs: Vec<f64>) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_by(f64::total_cmp);
    Some((mean, (dev.iter().sum::<f64>() / n).sqrt()))
}

/// Condition-level summaries grouped by the named config fields. Rows come
/// out sorted by group key; the result is independent of record order.
pub fn aggregate(records: &[RunRecord], group_by: &[String]) -> Result<AggregateTable> {
    let known = SimConfig::default().to_json_map();
    for field in group_by {
        if !known.contains_key(field) {
            return Err(Error::config(
                field.clone(),
                "cannot group by an unknown field",
            ));
        }
    }
    let mut groups: BTreeMap<GroupKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let map = r.config.to_json_map();
        let key = GroupKey(
            group_by
                .iter()
                .map(|f| KeyPart::from_value(map.get(f).unwrap_or(&Value::Null)))
                .collect(),
        );
        groups.entry(key).or_default().push(r);
    }

    let mut warnings = Vec::new();
    let rows = groups
        .into_iter()
        .map(|(key, members)| {
            let key: Vec<String> = key.0.iter().map(KeyPart::render).collect();
            let mut sizes: Vec<usize> = members.iter().map(|r| r.config.n_agents).collect();
            sizes.sort_unstable();
            sizes.dedup();
            if sizes.len() > 1 {
                let msg = format!(
                    "group [{}] pools population sizes {sizes:?}",
                    key.join(", ")
                );
                log::warn!("{msg}");
                warnings.push(msg);
            }
            let collect = |f: &dyn Fn(&RunRecord) -> Option<f64>| -> Vec<f64> {
                members.iter().filter_map(|r| f(r)).collect()
            };
            let wins: Vec<bool> = members.iter().filter_map(|r| r.summary.c_win).collect();
            let c_wins = wins.iter().filter(|w| **w).count();
            let rel = moments(collect(&|r| r.summary.relative_difference));
            AggregateRow {
                key,
                runs: members.len(),
                mixed_runs: wins.len(),
                c_wins,
                c_win_rate: (!wins.is_empty()).then(|| c_wins as f64 / wins.len() as f64),
                relative_difference_mean: rel.map(|m| m.0),
                relative_difference_sd: rel.map(|m| m.1),
                absolute_difference_mean: moments(collect(&|r| r.summary.absolute_difference))
                    .map(|m| m.0),
                total_resources_mean: moments(collect(&|r| Some(r.summary.total_resources)))
                    .map_or(0.0, |m| m.0),
                sd_all_mean: moments(collect(&|r| Some(r.summary.sd_all))).map_or(0.0, |m| m.0),
                mean_c_mean: moments(collect(&|r| r.summary.mean_c)).map(|m| m.0),
                mean_d_mean: moments(collect(&|r| r.summary.mean_d)).map(|m| m.0),
                degenerate_runs: members.iter().filter(|r| r.summary.degenerate).count(),
            }
        })
        .collect();
    Ok(AggregateTable {
        group_by: group_by.to_vec(),
        rows,
        warnings,
    })
}

impl AggregateTable {
    /// CSV with the group columns first, then [`AGGREGATE_COLUMNS`].
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header: Vec<&str> = self
            .group_by
            .iter()
            .map(String::as_str)
            .chain(AGGREGATE_COLUMNS)
            .collect();
        w.write_record(&header)?;
        let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
        for row in &self.rows {
            let mut fields = row.key.clone();
            fields.extend([
                row.runs.to_string(),
                row.mixed_runs.to_string(),
                row.c_wins.to_string(),
                opt(row.c_win_rate),
                opt(row.relative_difference_mean),
                opt(row.relative_difference_sd),
                opt(row.absolute_difference_mean),
                row.total_resources_mean.to_string(),
                row.sd_all_mean.to_string(),
                opt(row.mean_c_mean),
                opt(row.mean_d_mean),
                row.degenerate_runs.to_string(),
            ]);
            w.write_record(&fields)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Validation(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn population(cs: &[f64], ds: &[f64]) -> Vec<AgentState<f64>> {
        let mut out = Vec::new();
        for (t, xs) in [(AgentType::Cooperator, cs), (AgentType::Defector, ds)] {
            for &x in xs {
                let id = out.len();
                let mut a = AgentState::new(id, t, x, 0, 0);
                a.resources = x;
                out.push(a);
            }
        }
        out
    }

    #[test]
    fn hand_computed_example() {
        let s = summarize(&population(&[22.0, 24.0], &[30.0, 30.0]));
        assert_eq!(s.mean_c, Some(23.0));
        assert_eq!(s.mean_d, Some(30.0));
        assert_eq!(s.absolute_difference, Some(7.0));
        assert_eq!(s.c_win, Some(false));
        assert_eq!(s.total_resources, 106.0);
        // Population SD of {22, 24, 30, 30}: mean 26.5, var (20.25+6.25+12.25+12.25)/4 = 12.75.
        assert!((s.sd_all - 12.75_f64.sqrt()).abs() < 1e-12);
        assert!((s.relative_difference.unwrap() * s.sd_all + 7.0).abs() < 1e-9);
    }

    #[test]
    fn frozen_run_is_flagged_degenerate() {
        let s = summarize(&population(&[20.0; 3], &[20.0; 2]));
        assert!(s.degenerate);
        assert_eq!(s.relative_difference, Some(0.0));
        assert_eq!(s.c_win, Some(false));
    }

    #[test]
    fn single_type_population_omits_group_fields() {
        let s = summarize(&population(&[20.0, 25.0], &[]));
        assert_eq!(s.mean_d, None);
        assert_eq!(s.relative_difference, None);
        assert_eq!(s.c_win, None);
        assert_eq!(s.total_resources, 45.0);
    }

    fn record(mechanism: &str, c_win: bool, rel: f64, total: f64) -> RunRecord {
        let config = SimConfig {
            gossip_mechanism: serde_json::from_value(Value::String(mechanism.into())).unwrap(),
            ..SimConfig::default()
        };
        RunRecord {
            config,
            agents: Vec::new(),
            summary: ResourceSummary {
                mean_c: Some(0.0),
                mean_d: Some(0.0),
                mean_all: 0.0,
                sd_all: 1.0,
                relative_difference: Some(rel),
                absolute_difference: Some(rel.abs()),
                c_win: Some(c_win),
                degenerate: false,
                total_resources: total,
            },
            accounted_cooperations: 0,
            total_cooperations: 0,
            rounds_played: 0,
            gossip_steps: 0,
            gossip_transmissions: 0,
            gossip_declines: 0,
            tie_changes: Vec::new(),
            rounds: Vec::new(),
        }
    }

    #[test]
    fn c_win_rate_is_a_proportion() {
        let records: Vec<RunRecord> = (0..100)
            .map(|i| record("parallel", i < 43, if i < 43 { 1.0 } else { -1.0 }, 400.0))
            .collect();
        let t = aggregate(&records, &["gossip_mechanism".into()]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].c_win_rate, Some(0.43));
        assert_eq!(t.rows[0].c_wins, 43);
    }

    #[test]
    fn groups_by_mechanism_and_omits_empty_groups() {
        let records = vec![
            record("parallel", true, 1.0, 10.0),
            record("triadic", false, -1.0, 20.0),
            record("triadic", true, 0.5, 30.0),
        ];
        let t = aggregate(&records, &["gossip_mechanism".into()]).unwrap();
        let keys: Vec<_> = t.rows.iter().map(|r| r.key[0].as_str()).collect();
        assert_eq!(keys, ["parallel", "triadic"]);
        assert_eq!(t.rows[1].total_resources_mean, 25.0);
    }

    #[test]
    fn empty_input_gives_header_only_csv() {
        let t = aggregate(&[], &["regime".into()]).unwrap();
        let csv = t.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("regime,runs,mixed_runs,c_wins,c_win_rate"));
    }

    #[test]
    fn unknown_group_field_is_rejected() {
        assert!(aggregate(&[], &["nope".into()]).unwrap_err().is_config());
    }

    #[test]
    fn pooled_sizes_warn_but_succeed() {
        let mut a = record("parallel", true, 1.0, 1.0);
        let b = record("parallel", true, 1.0, 1.0);
        a.config.n_agents = 36;
        let t = aggregate(&[a, b], &["gossip_mechanism".into()]).unwrap();
        assert_eq!(t.warnings.len(), 1);
    }

    proptest! {
        #[test]
        fn relative_difference_is_shift_and_scale_invariant(
            cs in prop::collection::vec(0.0f64..100.0, 1..8),
            ds in prop::collection::vec(0.0f64..100.0, 1..8),
            shift in -50.0f64..50.0,
            scale in 0.1f64..10.0,
        ) {
            let base = summarize(&population(&cs, &ds));
            prop_assume!(!base.degenerate && base.sd_all > 1e-6);
            let moved: Vec<f64> = cs.iter().map(|x| x * scale + shift).collect();
            let moved_d: Vec<f64> = ds.iter().map(|x| x * scale + shift).collect();
            let other = summarize(&population(&moved, &moved_d));
            let (a, b) = (base.relative_difference.unwrap(), other.relative_difference.unwrap());
            prop_assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()));
            prop_assert_eq!(base.c_win.unwrap(), a > 0.0);
            let gap = base.mean_c.unwrap() - base.mean_d.unwrap();
            prop_assert!((a * base.sd_all - gap).abs() < 1e-9);
        }

        #[test]
        fn aggregate_ignores_record_order(
            rels in prop::collection::vec(-3.0f64..3.0, 1..30),
            rotate in 0usize..30,
        ) {
            let records: Vec<RunRecord> = rels
                .iter()
                .enumerate()
                .map(|(i, &r)| record(if i % 2 == 0 { "parallel" } else { "triadic" }, r > 0.0, r, 100.0 + r))
                .collect();
            let mut shuffled = records.clone();
            let k = rotate % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let g = vec!["gossip_mechanism".to_string()];
            prop_assert_eq!(
                aggregate(&records, &g).unwrap().to_csv().unwrap(),
                aggregate(&shuffled, &g).unwrap().to_csv().unwrap()
            );
        }
    }
}
