//! Parameter sweeps: Cartesian grids of config overrides times replicates,
//! executed on a worker pool. Output order and content depend only on the
//! grid, the master seed and the replicate count.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::metrics::{aggregate, AggregateTable, RunRecord};
use crate::rng::{derive_seed, fnv1a};
use crate::scheduler::run_simulation;

/// Shipped grid over the varied experimental factors.
pub const DEFAULT_GRID_JSON: &str = include_str!("../assets/default_grid.json");

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub master_seed: u64,
    /// Overrides applied to every condition.
    pub base: Map<String, Value>,
    /// Value lists per config field; conditions are their Cartesian product.
    pub axes: BTreeMap<String, Vec<Value>>,
    /// Aggregate grouping; defaults to the axis names.
    pub group_by: Option<Vec<String>>,
    /// Axes left out of the seed key: conditions differing only along these
    /// share seeds (common random numbers), enabling paired comparisons.
    pub paired_axes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub index: usize,
    pub overrides: Map<String, Value>,
    /// Canonical `field=value` text.
    pub label: String,
    /// `label` minus the paired axes; seeds are derived from it.
    pub seed_label: String,
    pub config: SimConfig,
}

impl Condition {
    pub fn seed(&self, master_seed: u64, replicate: u64) -> u64 {
        run_seed(master_seed, &self.seed_label, replicate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub condition: usize,
    pub replicate: u64,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub conditions: Vec<Condition>,
    /// Successful runs in (condition, replicate) order.
    pub records: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub group_by: Vec<String>,
}

impl SweepOutput {
    pub fn aggregate(&self) -> Result<AggregateTable> {
        aggregate(&self.records, &self.group_by)
    }
}

/// Seed for one replicate of one condition. Keyed on the condition's
/// content rather than its position, so extending a grid leaves existing
/// runs untouched.
pub fn run_seed(master_seed: u64, condition_label: &str, replicate: u64) -> u64 {
    derive_seed(&[master_seed, fnv1a(condition_label.as_bytes()), replicate])
}

impl SweepSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("<grid>", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn default_grid() -> Self {
        Self::from_json_str(DEFAULT_GRID_JSON).expect("shipped grid parses")
    }

    pub fn group_fields(&self) -> Vec<String> {
        self.group_by
            .clone()
            .unwrap_or_else(|| self.axes.keys().cloned().collect())
    }

    pub fn condition_count(&self) -> usize {
        self.axes.values().map(Vec::len).product()
    }

    pub fn conditions(&self) -> Result<Vec<Condition>> {
        let base = SimConfig::default().with_overrides(&self.base)?;
        for (field, values) in &self.axes {
            if values.is_empty() {
                return Err(Error::config(field.clone(), "axis has no values"));
            }
        }
        if let Some(bad) = self
            .paired_axes
            .iter()
            .find(|f| !self.axes.contains_key(*f))
        {
            return Err(Error::config(bad.clone(), "paired axis is not a grid axis"));
        }
        let axes: Vec<(&String, &Vec<Value>)> = self.axes.iter().collect();
        let total = self.condition_count();
        let mut out = Vec::with_capacity(total);
        for index in 0..total {
            let mut rest = index;
            let mut overrides = Map::new();
            for (field, values) in axes.iter().rev() {
                overrides.insert((*field).clone(), values[rest % values.len()].clone());
                rest /= values.len();
            }
            let overrides: Map<String, Value> = axes
                .iter()
                .map(|(f, _)| ((*f).clone(), overrides[f.as_str()].clone()))
                .collect();
            let label_of = |paired: bool| {
                overrides
                    .iter()
                    .filter(|(k, _)| paired || !self.paired_axes.contains(k))
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join(";")
            };
            let label = label_of(true);
            let seed_label = label_of(false);
            let config = base.with_overrides(&overrides)?;
            out.push(Condition {
                index,
                overrides,
                label,
                seed_label,
                config,
            });
        }
        Ok(out)
    }
}

/// Executes `replicates` runs of every condition on `workers` threads.
/// `progress` receives (completed, total) after each run.
pub fn run_sweep(
    spec: &SweepSpec,
    replicates: u64,
    workers: usize,
    progress: Option<&(dyn Fn(usize, usize) + Sync)>,
) -> Result<SweepOutput> {
    if replicates == 0 {
        return Err(Error::config("replicates", "must be at least 1"));
    }
    if workers == 0 {
        return Err(Error::config("workers", "must be at least 1"));
    }
    let group_by = spec.group_fields();
    let known = SimConfig::default().to_json_map();
    if let Some(bad) = group_by.iter().find(|f| !known.contains_key(*f)) {
        return Err(Error::config(
            bad.clone(),
            "cannot group by an unknown field",
        ));
    }
    let conditions = spec.conditions()?;
    let jobs: Vec<(usize, u64, SimConfig)> = conditions
        .iter()
        .flat_map(|c| {
            (0..replicates).map(move |r| {
                let mut config = c.config.clone();
                config.seed = c.seed(spec.master_seed, r);
                (c.index, r, config)
            })
        })
        .collect();

    let total = jobs.len();
    let done = AtomicUsize::new(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Validation(format!("worker pool: {e}")))?;
    let results: Vec<Result<RunRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|(_, _, config)| {
                let out = run_simulation(config);
                let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(report) = progress {
                    report(finished, total);
                }
                out
            })
            .collect()
    });

    let mut records = Vec::with_capacity(total);
    let mut failures = Vec::new();
    for ((condition, replicate, config), result) in jobs.into_iter().zip(results) {
        match result {
            Ok(r) => records.push(r),
            Err(e) => failures.push(RunFailure {
                condition,
                replicate,
                seed: config.seed,
                message: e.to_string(),
            }),
        }
    }
    Ok(SweepOutput {
        conditions,
        records,
        failures,
        group_by,
    })
}
