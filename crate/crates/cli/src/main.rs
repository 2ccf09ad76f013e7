use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde_json::{Map, Value};

use trustgossip::config::parse_override;
use trustgossip::gossip::default_table_checksum;
use trustgossip::io::{self, FORMAT_DESCRIPTION};
use trustgossip::{
    Observer, RngStream, RoundSnapshot, SimConfig, Simulation, SweepSpec, TriadicTable,
};

#[derive(Parser)]
#[command(
    name = "trustgossip",
    about = "Trust Game simulations with gossip on signed networks",
    disable_version_flag = true
)]
struct Cli {
    /// Print build information and the default triadic table checksum.
    #[arg(short = 'V', long, global = true)]
    version: bool,
    /// Describe every input and output file format.
    #[arg(long, global = true)]
    describe_formats: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and print its record as JSON.
    Run(RunArgs),
    /// Run a parameter grid with replicates on a worker pool.
    Sweep(SweepArgs),
    /// Generate a random signed network.
    GenNetwork(GenArgs),
    /// Check a triadic decision table for completeness and lint warnings.
    ValidateTable(TableArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; omitted fields take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override one config field, e.g. `--set gossip_mechanism=parallel`.
    #[arg(long = "set", value_name = "FIELD=VALUE")]
    overrides: Vec<String>,
    /// Permit single-type populations.
    #[arg(long)]
    allow_degenerate: bool,
    /// Write per-round snapshots as JSON lines.
    #[arg(long, value_name = "PATH")]
    snapshots: Option<PathBuf>,
    /// Write the game network after every round as `round_NNNN.csv`.
    #[arg(long, value_name = "DIR")]
    network_dir: Option<PathBuf>,
    /// Pretty-print the record.
    #[arg(long)]
    pretty: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid JSON; the shipped default grid when omitted.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    replicates: u64,
    /// Worker threads; all available cores when omitted.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Override the grid's master seed.
    #[arg(long)]
    master_seed: Option<u64>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(short = 'n', long, default_value_t = 16)]
    nodes: usize,
    #[arg(long, default_value_t = 0.2)]
    pos: f64,
    #[arg(long, default_value_t = 0.1)]
    neg: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short = 'o', long)]
    output: PathBuf,
}

#[derive(Args)]
struct TableArgs {
    /// Table CSV; the built-in default when omitted.
    path: Option<PathBuf>,
    /// Print the table as CSV after validating it.
    #[arg(long)]
    print: bool,
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn version_text() -> String {
    format!(
        "trustgossip {} ({} build, {}-{})\ndefault triadic table sha256 {}",
        env!("CARGO_PKG_VERSION"),
        if cfg!(debug_assertions) {
            "debug"
        } else {
            "release"
        },
        std::env::consts::ARCH,
        std::env::consts::OS,
        default_table_checksum()
    )
}

struct NetworkDump {
    dir: PathBuf,
    error: Option<trustgossip::Error>,
}

impl Observer<f64> for NetworkDump {
    fn on_round(&mut self, snap: &RoundSnapshot, sim: &trustgossip::Simulation) {
        if self.error.is_some() {
            return;
        }
        if let Some(net) = sim.game_network() {
            let path = self.dir.join(format!("round_{:04}.csv", snap.round));
            if let Err(e) = io::atomic_write(&path, net.to_csv().as_bytes()) {
                self.error = Some(e);
            }
        }
    }
}

fn cmd_run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let mut config = match &args.config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    let mut overrides = Map::new();
    for text in &args.overrides {
        let (field, value) = parse_override(text)?;
        overrides.insert(field, value);
    }
    if let Some(seed) = args.seed {
        overrides.insert("seed".into(), Value::from(seed));
    }
    if args.allow_degenerate {
        overrides.insert("allow_degenerate".into(), Value::Bool(true));
    }
    config = config.with_overrides(&overrides)?;

    let sim = Simulation::new(config)?;
    let record = match &args.network_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut dump = NetworkDump {
                dir: dir.clone(),
                error: None,
            };
            let record = sim.run_with(&mut dump);
            if let Some(e) = dump.error {
                return Err(e.into());
            }
            record
        }
        None => sim.run(),
    };
    if let Some(path) = &args.snapshots {
        let mut text = String::new();
        for snap in &record.rounds {
            text.push_str(&serde_json::to_string(snap)?);
            text.push('\n');
        }
        io::atomic_write(path, text.as_bytes())?;
    }
    let mut out = if args.pretty {
        serde_json::to_string_pretty(&record)?
    } else {
        record.to_json_line()?
    };
    out.push('\n');
    emit(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<ExitCode> {
    let mut spec = match &args.grid {
        Some(path) => SweepSpec::load(path)?,
        None => SweepSpec::default_grid(),
    };
    if let Some(seed) = args.master_seed {
        spec.master_seed = seed;
    }
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if args.replicates == 0 {
        return Err(trustgossip::Error::config("replicates", "must be at least 1").into());
    }
    let total = spec.condition_count() as u64 * args.replicates;
    info!(
        "{} conditions x {} replicates = {total} runs on {workers} workers",
        spec.condition_count(),
        args.replicates
    );

    let last_percent = AtomicUsize::new(0);
    let progress = |done: usize, total: usize| {
        let percent = done * 100 / total.max(1);
        if percent > last_percent.fetch_max(percent, Ordering::Relaxed) || done == total {
            eprint!("\rsweep: {done}/{total} runs ({percent}%)");
            if done == total {
                eprintln!();
            }
        }
    };
    let output = trustgossip::run_sweep(&spec, args.replicates, workers, Some(&progress))?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let runs = args.out.join("runs.jsonl");
    let aggregate = args.out.join("aggregate.csv");
    let failures = args.out.join("failures.jsonl");
    io::write_records(&output.records, &runs)?;
    let table = output.aggregate()?;
    for w in &table.warnings {
        warn!("{w}");
    }
    io::write_aggregate(&table, &aggregate)?;
    let mut text = String::new();
    for f in &output.failures {
        text.push_str(&serde_json::to_string(f)?);
        text.push('\n');
    }
    io::atomic_write(&failures, text.as_bytes())?;

    info!(
        "wrote {}, {} and {}",
        runs.display(),
        aggregate.display(),
        failures.display()
    );
    if output.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in output.failures.iter().take(5) {
            warn!(
                "condition {} replicate {}: {}",
                f.condition, f.replicate, f.message
            );
        }
        eprintln!("{} of {total} runs failed", output.failures.len());
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_gen_network(args: GenArgs) -> anyhow::Result<ExitCode> {
    if !(io::MIN_NETWORK_NODES..=io::MAX_NETWORK_NODES).contains(&args.nodes) {
        return Err(trustgossip::Error::config(
            "n",
            format!(
                "{} is outside {}..={}",
                args.nodes,
                io::MIN_NETWORK_NODES,
                io::MAX_NETWORK_NODES
            ),
        )
        .into());
    }
    let mut rng = RngStream::new(args.seed, "signed-network");
    let net = io::generate_signed_network(args.nodes, args.pos, args.neg, &mut rng)?;
    io::write_signed_network(&net, &args.output)?;
    let positive = net
        .edges()
        .filter(|e| e.2 == trustgossip::Sign::Positive)
        .count();
    println!(
        "{} nodes, {} edges ({positive} positive, {} negative), {} isolated; wrote {} and {}",
        net.n(),
        net.edge_count(),
        net.edge_count() - positive,
        net.isolates().len(),
        args.output.display(),
        io::mapping_path_for(&args.output).display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate_table(args: TableArgs) -> anyhow::Result<ExitCode> {
    let table = match &args.path {
        Some(path) => TriadicTable::load(path)?,
        None => TriadicTable::default(),
    };
    let mut out = format!("{}/36 configurations covered\n", table.len());
    for w in table.lint() {
        out.push_str(&format!("warning: {w}\n"));
    }
    if args.print {
        out.push_str(&table.to_csv());
    }
    emit(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    if cli.version {
        println!("{}", version_text());
        return Ok(ExitCode::SUCCESS);
    }
    if cli.describe_formats {
        emit(FORMAT_DESCRIPTION)?;
        return Ok(ExitCode::SUCCESS);
    }
    match cli.command {
        Some(Command::Run(a)) => cmd_run(a),
        Some(Command::Sweep(a)) => cmd_sweep(a),
        Some(Command::GenNetwork(a)) => cmd_gen_network(a),
        Some(Command::ValidateTable(a)) => cmd_validate_table(a),
        None => bail!("no subcommand given; see --help"),
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<trustgossip::Error>() {
        Some(e) if e.is_config() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
