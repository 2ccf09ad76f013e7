//! Transmission rules for gossip triads.
//!
//! A triad is the sender, the receiver and the gossip target. The decision
//! to pass a message on depends on the sign of the sender-receiver tie, the
//! sender's and receiver's relations to the target (positive, negative or
//! none) and the valence of the message: 2 x 3 x 3 x 2 = 36 cells.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::network::Sign;

/// Shipped default table, one documented row per configuration.
pub const DEFAULT_TABLE_CSV: &str = include_str!("../../assets/default_triadic_table.csv");

pub const TABLE_SIZE: usize = 36;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Positive,
    Negative,
    Absent,
}

impl From<Option<Sign>> for Relation {
    fn from(sign: Option<Sign>) -> Self {
        match sign {
            Some(Sign::Positive) => Relation::Positive,
            Some(Sign::Negative) => Relation::Negative,
            None => Relation::Absent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Valence {
    PositiveOrNeutral,
    Negative,
}

impl Valence {
    pub fn of<S: crate::scalar::Scalar>(payload: S) -> Self {
        if payload < S::zero() {
            Valence::Negative
        } else {
            Valence::PositiveOrNeutral
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriadConfig {
    pub sender_receiver: Sign,
    pub sender_target: Relation,
    pub receiver_target: Relation,
}

/// One cell of the table: a triad plus the message valence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Situation {
    pub triad: TriadConfig,
    pub valence: Valence,
}

const SIGNS: [Sign; 2] = [Sign::Positive, Sign::Negative];
const RELATIONS: [Relation; 3] = [Relation::Positive, Relation::Negative, Relation::Absent];
const VALENCES: [Valence; 2] = [Valence::PositiveOrNeutral, Valence::Negative];

fn sign_token(s: Sign) -> &'static str {
    match s {
        Sign::Positive => "+",
        Sign::Negative => "-",
    }
}

fn relation_token(r: Relation) -> &'static str {
    match r {
        Relation::Positive => "+",
        Relation::Negative => "-",
        Relation::Absent => "0",
    }
}

fn valence_token(v: Valence) -> &'static str {
    match v {
        Valence::PositiveOrNeutral => "pos",
        Valence::Negative => "neg",
    }
}

impl Situation {
    pub fn all() -> impl Iterator<Item = Situation> {
        SIGNS.into_iter().flat_map(|sr| {
            RELATIONS.into_iter().flat_map(move |st| {
                RELATIONS.into_iter().flat_map(move |rt| {
                    VALENCES.into_iter().map(move |valence| Situation {
                        triad: TriadConfig {
                            sender_receiver: sr,
                            sender_target: st,
                            receiver_target: rt,
                        },
                        valence,
                    })
                })
            })
        })
    }

    pub fn index(&self) -> usize {
        let sr = match self.triad.sender_receiver {
            Sign::Positive => 0,
            Sign::Negative => 1,
        };
        let rel = |r: Relation| match r {
            Relation::Positive => 0,
            Relation::Negative => 1,
            Relation::Absent => 2,
        };
        let v = match self.valence {
            Valence::PositiveOrNeutral => 0,
            Valence::Negative => 1,
        };
        sr * 18 + rel(self.triad.sender_target) * 6 + rel(self.triad.receiver_target) * 2 + v
    }
}

impl fmt::Display for Situation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sr={} st={} rt={} valence={}",
            sign_token(self.triad.sender_receiver),
            relation_token(self.triad.sender_target),
            relation_token(self.triad.receiver_target),
            valence_token(self.valence)
        )
    }
}

/// The built-in transmission heuristic.
///
/// Positive news travels over positive ties when neither party dislikes the
/// target. Negative news travels over positive ties to receivers who are not
/// friends of the target, and over any tie when sender and receiver share a
/// negative tie to the target.
pub fn default_rule(s: Situation) -> bool {
    let TriadConfig {
        sender_receiver: sr,
        sender_target: st,
        receiver_target: rt,
    } = s.triad;
    match s.valence {
        Valence::PositiveOrNeutral => {
            sr == Sign::Positive && st != Relation::Negative && rt != Relation::Negative
        }
        Valence::Negative => {
            let common_enemy = st == Relation::Negative && rt == Relation::Negative;
            common_enemy || (sr == Sign::Positive && rt != Relation::Positive)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriadicTable {
    transmit: [bool; TABLE_SIZE],
}

impl Default for TriadicTable {
    fn default() -> Self {
        Self::from_rule(default_rule)
    }
}

impl TriadicTable {
    pub fn from_rule(rule: impl Fn(Situation) -> bool) -> Self {
        let mut transmit = [false; TABLE_SIZE];
        for s in Situation::all() {
            transmit[s.index()] = rule(s);
        }
        Self { transmit }
    }

    /// Every situation transmits; equivalent to unconditional diffusion.
    pub fn all_yes() -> Self {
        Self::from_rule(|_| true)
    }

    pub fn transmits(&self, triad: TriadConfig, valence: Valence) -> bool {
        self.transmit[Situation { triad, valence }.index()]
    }

    pub fn len(&self) -> usize {
        TABLE_SIZE
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn situations(&self) -> impl Iterator<Item = (Situation, bool)> + '_ {
        Situation::all().map(|s| (s, self.transmit[s.index()]))
    }

    /// Non-fatal concerns: rows that send negative gossip to a friend of the target.
    pub fn lint(&self) -> Vec<String> {
        self.situations()
            .filter(|(s, yes)| {
                *yes && s.valence == Valence::Negative
                    && s.triad.receiver_target == Relation::Positive
            })
            .map(|(s, _)| {
                format!("{s}: negative gossip sent to a friend of the target (usually inhibited)")
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sr_sign,st_rel,rt_rel,valence,transmit\n");
        for (s, yes) in self.situations() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                sign_token(s.triad.sender_receiver),
                relation_token(s.triad.sender_target),
                relation_token(s.triad.receiver_target),
                valence_token(s.valence),
                u8::from(yes)
            ));
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, &path.display().to_string())
    }

    /// Parses the CSV format (`sr_sign,st_rel,rt_rel,valence,transmit`,
    /// `#` comments allowed). All 36 situations must appear exactly once.
    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["sr_sign", "st_rel", "rt_rel", "valence", "transmit"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse {
                path: source.to_owned(),
                line: 1,
                message: format!("expected header {}", expected.join(",")),
            });
        }
        let mut seen: BTreeMap<usize, (Situation, bool)> = BTreeMap::new();
        let mut duplicates = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let parse_err = |message: String| Error::Parse {
                path: source.to_owned(),
                line,
                message,
            };
            if record.len() != 5 {
                return Err(parse_err(format!(
                    "expected 5 fields, found {}",
                    record.len()
                )));
            }
            let sr = match &record[0] {
                "+" | "+1" | "1" => Sign::Positive,
                "-" | "-1" => Sign::Negative,
                other => return Err(parse_err(format!("bad sr_sign `{other}`"))),
            };
            let rel = |text: &str, col: &str| match text {
                "+" | "+1" | "1" => Ok(Relation::Positive),
                "-" | "-1" => Ok(Relation::Negative),
                "0" | "absent" | "none" => Ok(Relation::Absent),
                other => Err(parse_err(format!("bad {col} `{other}`"))),
            };
            let st = rel(&record[1], "st_rel")?;
            let rt = rel(&record[2], "rt_rel")?;
            let valence = match &record[3] {
                "pos" | "positive" | "neutral" | "+" => Valence::PositiveOrNeutral,
                "neg" | "negative" | "-" => Valence::Negative,
                other => return Err(parse_err(format!("bad valence `{other}`"))),
            };
            let transmit = match record[4].to_ascii_lowercase().as_str() {
                "1" | "yes" | "true" | "y" => true,
                "0" | "no" | "false" | "n" => false,
                other => return Err(parse_err(format!("bad transmit `{other}`"))),
            };
            let situation = Situation {
                triad: TriadConfig {
                    sender_receiver: sr,
                    sender_target: st,
                    receiver_target: rt,
                },
                valence,
            };
            if seen
                .insert(situation.index(), (situation, transmit))
                .is_some()
            {
                duplicates.push(format!("{situation} (line {line})"));
            }
        }
        if !duplicates.is_empty() {
            return Err(Error::TableDuplicate(duplicates));
        }
        let missing: Vec<String> = Situation::all()
            .filter(|s| !seen.contains_key(&s.index()))
            .map(|s| s.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::TableIncomplete(missing));
        }
        Ok(Self::from_rule(|s| seen[&s.index()].1))
    }
}

/// SHA-256 of the shipped default table file, hex encoded.
pub fn default_table_checksum() -> String {
    Sha256::digest(DEFAULT_TABLE_CSV.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
