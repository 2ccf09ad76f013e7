//! Graph types: the signed affect network gossip travels on, and the
//! unsigned game network that structures Trust Game partner choice.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Positive => 1,
            Sign::Negative => -1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "+1",
            Sign::Negative => "-1",
        })
    }
}

/// Friendship/antipathy network. Undirected, no self-loops, one edge per pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedNetwork {
    adjacency: Vec<BTreeMap<usize, Sign>>,
    labels: Vec<String>,
}

impl SignedNetwork {
    /// Empty network whose node labels are their ids.
    pub fn new(n: usize) -> Self {
        Self::with_labels((0..n).map(|i| i.to_string()).collect())
    }

    pub fn with_labels(labels: Vec<String>) -> Self {
        Self {
            adjacency: vec![BTreeMap::new(); labels.len()],
            labels,
        }
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Inserts an edge. Re-inserting with the same sign is a no-op; a
    /// conflicting sign is an error.
    pub fn add_edge(&mut self, a: usize, b: usize, sign: Sign) -> Result<()> {
        let n = self.n();
        if a >= n || b >= n {
            return Err(Error::Validation(format!(
                "edge ({a}, {b}) out of range for {n} nodes"
            )));
        }
        if a == b {
            return Err(Error::Validation(format!(
                "self-loop on node {}",
                self.labels[a]
            )));
        }
        if let Some(&existing) = self.adjacency[a].get(&b) {
            if existing != sign {
                return Err(Error::Validation(format!(
                    "conflicting signs for pair ({}, {}): {existing} and {sign}",
                    self.labels[a], self.labels[b]
                )));
            }
            return Ok(());
        }
        self.adjacency[a].insert(b, sign);
        self.adjacency[b].insert(a, sign);
        Ok(())
    }

    pub fn sign(&self, a: usize, b: usize) -> Option<Sign> {
        self.adjacency[a].get(&b).copied()
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = (usize, Sign)> + '_ {
        self.adjacency[a].iter().map(|(&b, &s)| (b, s))
    }

    pub fn degree(&self, a: usize) -> usize {
        self.adjacency[a].len()
    }

    /// Edges as `(a, b, sign)` with `a < b`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Sign)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, nbrs)| nbrs.range(a + 1..).map(move |(&b, &s)| (a, b, s)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeMap::len).sum::<usize>() / 2
    }

    pub fn isolates(&self) -> Vec<usize> {
        (0..self.n()).filter(|&a| self.degree(a) == 0).collect()
    }

    /// Nodes reachable from `start` along any edge, including `start`.
    pub fn reachable_from(&self, start: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(a) = stack.pop() {
            for (b, _) in self.neighbors(a) {
                if seen.insert(b) {
                    stack.push(b);
                }
            }
        }
        seen
    }

    pub fn is_connected(&self) -> bool {
        self.n() == 0 || self.reachable_from(0).len() == self.n()
    }
}

/// Unsigned Trust Game interaction network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameNetwork {
    adjacency: Vec<BTreeSet<usize>>,
}

impl GameNetwork {
    pub fn new(n: usize) -> Self {
        Self {
            adjacency: vec![BTreeSet::new(); n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::new(n);
        for a in 0..n {
            for b in a + 1..n {
                g.add_edge(a, b);
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    /// Returns true when the edge was new.
    pub fn add_edge(&mut self, a: usize, b: usize) -> bool {
        assert_ne!(a, b, "game network has no self-loops");
        let inserted = self.adjacency[a].insert(b);
        self.adjacency[b].insert(a);
        inserted
    }

    /// Returns true when the edge existed.
    pub fn remove_edge(&mut self, a: usize, b: usize) -> bool {
        let removed = self.adjacency[a].remove(&b);
        self.adjacency[b].remove(&a);
        removed
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].contains(&b)
    }

    pub fn neighbors(&self, a: usize) -> &BTreeSet<usize> {
        &self.adjacency[a]
    }

    pub fn degree(&self, a: usize) -> usize {
        self.adjacency[a].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(BTreeSet::len).collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, nbrs)| nbrs.range(a + 1..).map(move |&b| (a, b)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn isolates(&self) -> Vec<usize> {
        (0..self.n()).filter(|&a| self.degree(a) == 0).collect()
    }

    /// Number of edges present in exactly one of the two networks.
    pub fn symmetric_difference(&self, other: &GameNetwork) -> usize {
        assert_eq!(self.n(), other.n());
        self.adjacency
            .iter()
            .zip(&other.adjacency)
            .enumerate()
            .map(|(a, (x, y))| x.symmetric_difference(y).filter(|&&b| b > a).count())
            .sum()
    }

    /// Edge list as CSV with header `a,b`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b\n");
        for (a, b) in self.edges() {
            out.push_str(&format!("{a},{b}\n"));
        }
        out
    }
}
