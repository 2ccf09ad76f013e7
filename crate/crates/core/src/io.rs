//! Network files, synthetic networks and result writers.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::error::{Error, Result};
use crate::metrics::{AggregateTable, RunRecord};
use crate::network::{Sign, SignedNetwork};
use crate::rng::RngStream;

pub const MIN_NETWORK_NODES: usize = 3;
pub const MAX_NETWORK_NODES: usize = 10_000;

pub fn load_signed_network(path: &Path) -> Result<SignedNetwork> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_signed_network(file, &path.display().to_string())
}

/// Parses a signed edge list (`a,b,sign`, sign one of `+1`/`-1`). Labels are
/// arbitrary strings numbered densely in order of first appearance. A row
/// with empty `b` and `sign` declares a node without adding an edge.
pub fn read_signed_network<R: Read>(reader: R, source: &str) -> Result<SignedNetwork> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if headers != ["a", "b", "sign"] {
        return Err(Error::Parse {
            path: source.to_owned(),
            line: 1,
            message: "expected header a,b,sign".into(),
        });
    }

    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<(usize, usize, Sign, u64)> = Vec::new();
    let mut intern = |label: &str| -> usize {
        *ids.entry(label.to_owned()).or_insert_with(|| {
            labels.push(label.to_owned());
            labels.len() - 1
        })
    };

    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |message: String| Error::Parse {
            path: source.to_owned(),
            line,
            message,
        };
        if record.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", record.len())));
        }
        let (a, b, sign) = (&record[0], &record[1], &record[2]);
        if a.is_empty() {
            return Err(err("empty node label".into()));
        }
        if b.is_empty() && sign.is_empty() {
            intern(a);
            continue;
        }
        if b.is_empty() {
            return Err(err("empty node label".into()));
        }
        let sign = match sign {
            "+1" | "1" | "+" => Sign::Positive,
            "-1" | "-" => Sign::Negative,
            other => return Err(err(format!("sign must be +1 or -1, got `{other}`"))),
        };
        if a == b {
            return Err(err(format!("self-loop on `{a}`")));
        }
        let (ia, ib) = (intern(a), intern(b));
        edges.push((ia, ib, sign, line));
    }

    let n = labels.len();
    if !(MIN_NETWORK_NODES..=MAX_NETWORK_NODES).contains(&n) {
        return Err(Error::Validation(format!(
            "{source}: {n} nodes is outside {MIN_NETWORK_NODES}..={MAX_NETWORK_NODES}"
        )));
    }
    let mut net = SignedNetwork::with_labels(labels);
    for (a, b, sign, line) in edges {
        net.add_edge(a, b, sign)
            .map_err(|e| Error::Validation(format!("{source}:{line}: {e}")))?;
    }
    let isolates = net.isolates();
    if !isolates.is_empty() {
        log::warn!(
            "{source}: {} isolated node(s) will never gossip",
            isolates.len()
        );
    }
    Ok(net)
}

/// Edge-list CSV. Every node is declared first, in id order, so reading the
/// file back reproduces the same ids.
pub fn signed_network_to_csv(net: &SignedNetwork) -> String {
    let mut out = String::from("a,b,sign\n");
    let labels = net.labels();
    for label in labels {
        out.push_str(&format!("{label},,\n"));
    }
    for (a, b, sign) in net.edges() {
        out.push_str(&format!("{},{},{sign}\n", labels[a], labels[b]));
    }
    out
}

/// `id,label` table joining dense ids back to original node labels.
pub fn id_mapping_csv(net: &SignedNetwork) -> String {
    let mut out = String::from("id,label\n");
    for (id, label) in net.labels().iter().enumerate() {
        out.push_str(&format!("{id},{label}\n"));
    }
    out
}

/// Where the id mapping for a network file lives: `<stem>.ids.csv` beside it.
pub fn mapping_path_for(network_path: &Path) -> PathBuf {
    let stem = network_path
        .file_stem()
        .map_or_else(|| "network".into(), |s| s.to_string_lossy().into_owned());
    network_path.with_file_name(format!("{stem}.ids.csv"))
}

/// Writes the network and its id mapping side by side.
pub fn write_signed_network(net: &SignedNetwork, path: &Path) -> Result<()> {
    atomic_write(path, signed_network_to_csv(net).as_bytes())?;
    atomic_write(&mapping_path_for(path), id_mapping_csv(net).as_bytes())
}

/// Independent per-pair draw: positive with `pos_density`, negative with
/// `neg_density`, otherwise absent. Connectivity is not enforced.
pub fn generate_signed_network(
    n: usize,
    pos_density: f64,
    neg_density: f64,
    rng: &mut RngStream,
) -> Result<SignedNetwork> {
    if !(0.0..=1.0).contains(&pos_density) {
        return Err(Error::config(
            "pos_density",
            format!("{pos_density} is outside [0, 1]"),
        ));
    }
    if !(0.0..=1.0).contains(&neg_density) {
        return Err(Error::config(
            "neg_density",
            format!("{neg_density} is outside [0, 1]"),
        ));
    }
    if pos_density + neg_density > 1.0 {
        return Err(Error::config("neg_density", "densities sum above 1"));
    }
    let mut net = SignedNetwork::new(n);
    for a in 0..n {
        for b in a + 1..n {
            let x: f64 = rng.gen();
            let sign = if x < pos_density {
                Some(Sign::Positive)
            } else if x < pos_density + neg_density {
                Some(Sign::Negative)
            } else {
                None
            };
            if let Some(s) = sign {
                net.add_edge(a, b, s)?;
            }
        }
    }
    Ok(net)
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn records_to_jsonl(records: &[RunRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_json_line()?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_records(records: &[RunRecord], path: &Path) -> Result<()> {
    atomic_write(path, records_to_jsonl(records)?.as_bytes())
}

pub fn write_aggregate(table: &AggregateTable, path: &Path) -> Result<()> {
    atomic_write(path, table.to_csv()?.as_bytes())
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Human-readable summary of every file format the tools read or write.
pub const FORMAT_DESCRIPTION: &str = "\
config (JSON): one flat object of SimConfig fields; omitted fields take defaults,
  unknown fields are rejected.
signed network (CSV): header `a,b,sign`; a and b are node labels (any string),
  sign is +1 or -1. Labels get dense ids 0..N-1 in order of first appearance.
  A row `label,,` declares a node without an edge. Duplicate pairs must agree
  on the sign. The id mapping is written beside generated files as
  `<stem>.ids.csv` with header `id,label`.
triadic table (CSV): header `sr_sign,st_rel,rt_rel,valence,transmit`; sr_sign in
  {+,-}, st_rel/rt_rel in {+,-,0} (0 = no tie), valence in {pos,neg}, transmit in
  {1,0}. All 36 combinations must appear exactly once. `#` starts a comment.
game network snapshot (CSV): header `a,b`, one unsigned edge per row, a < b.
run records (JSON lines): one RunRecord object per line (config echo, per-agent
  final resources, summary statistics, per-round snapshots).
round snapshots (JSON lines): round, phase, resources, cooperations, returns,
  tie_changes, gossip_pieces, gossip_transmissions, gossip_declines.
aggregate (CSV): group-by columns, then runs, mixed_runs, c_wins, c_win_rate,
  relative_difference_mean, relative_difference_sd, absolute_difference_mean,
  total_resources_mean, sd_all_mean, mean_c_mean, mean_d_mean, degenerate_runs.
sweep grid (JSON): {\"master_seed\": u64, \"base\": {config fields},
  \"axes\": {field: [values...]}, \"group_by\": [fields] (optional),
  \"paired_axes\": [axis names left out of the seed key] (optional)}.
";
