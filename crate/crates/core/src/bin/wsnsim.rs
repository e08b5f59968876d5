//! Command-line experiment runner.
//!
//! `wsnsim run` executes one simulation and exports its results;
//! `wsnsim batch` sweeps topologies x seeds x strategies into one output
//! tree with an aggregated summary. Exit codes: 0 success, 1 usage error,
//! 2 runtime or I/O error.

use std::fs;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use wsnsim_core::batch::{run_batch, BatchError, BatchSpec};
use wsnsim_core::config::{parse_area, ConfigError, Settings};
use wsnsim_core::engine::run_simulation;
use wsnsim_core::export::{export, ExportFormat, RunSummary};
use wsnsim_core::strategies::StrategyKind;
use wsnsim_core::topology::Topology;
use wsnsim_core::trace::{NullSink, WriterSink};

#[derive(Parser)]
#[command(
    name = "wsnsim",
    version,
    about = "Round-based lifetime simulator for energy-constrained sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and export its results.
    Run(RunArgs),
    /// Sweep topologies x seeds x strategies and aggregate the summaries.
    Batch(BatchArgs),
}

#[derive(Args)]
struct SharedArgs {
    /// Config file with key = value defaults; flags always win.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Number of nodes to place.
    #[arg(long, value_name = "N")]
    nodes: Option<usize>,
    /// Field dimensions as WIDTHxHEIGHT, e.g. 100x100.
    #[arg(long, value_name = "WxH")]
    area: Option<String>,
    /// Export format: csv or json.
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
    /// Cluster count (clustering strategies only).
    #[arg(long, value_name = "K")]
    clusters: Option<usize>,
    /// Iterations between elections (random-cluster only).
    #[arg(long, value_name = "R")]
    round_length: Option<u64>,
    /// Neighbor table size (diffusion and e3d only).
    #[arg(long, value_name = "M")]
    max_neighbors: Option<usize>,
    /// Hard iteration cap.
    #[arg(long, value_name = "N")]
    max_iterations: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    /// Routing strategy: direct, diffusion, e3d, ideal-diffusion,
    /// random-cluster, or ideal-cluster.
    #[arg(long, value_name = "NAME")]
    algo: Option<String>,
    /// Seed for topology placement and engine randomness.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Output directory for the export files.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Reuse a previously exported topology file instead of generating
    /// one; incompatible with --nodes and --area.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["nodes", "area"])]
    topology: Option<PathBuf>,
    /// Print the per-iteration event trace to standard output.
    #[arg(short, long)]
    verbose: bool,
    #[command(flatten)]
    shared: SharedArgs,
}

#[derive(Args)]
struct BatchArgs {
    /// Number of distinct topologies to generate.
    #[arg(long, value_name = "N", default_value_t = 20)]
    topologies: usize,
    /// Independent seeds per topology.
    #[arg(long, value_name = "N", default_value_t = 1)]
    seeds: usize,
    /// Comma-separated strategy names; defaults to all six.
    #[arg(long, value_name = "LIST")]
    strategies: Option<String>,
    /// Base seed the per-run seeds are derived from.
    #[arg(long, value_name = "S", default_value_t = 1)]
    base_seed: u64,
    /// Output directory for the batch tree.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[command(flatten)]
    shared: SharedArgs,
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

fn runtime(message: impl Into<String>) -> CliError {
    CliError::Runtime(message.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes, not usage errors.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Batch(args) => cmd_batch(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}: error: {}", Cli::command().get_name(), err.message());
            err.code()
        }
    }
}

/// Fold the config file (if any) and the explicit flags into settings.
fn resolve_settings(shared: &SharedArgs) -> Result<Settings, CliError> {
    let mut settings = Settings::default();
    if let Some(path) = &shared.config {
        let text = fs::read_to_string(path)
            .map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        settings.apply_file(&text).map_err(|e| match e {
            ConfigError::Invalid(_) => usage(e.to_string()),
            _ => usage(format!("{}: {e}", path.display())),
        })?;
    }
    if let Some(nodes) = shared.nodes {
        settings.nodes = nodes;
    }
    if let Some(area) = &shared.area {
        let (w, h) = parse_area(area).map_err(|e| usage(format!("--area: {e}")))?;
        settings.width = w;
        settings.height = h;
    }
    if let Some(format) = &shared.format {
        settings.format = ExportFormat::parse(format)
            .ok_or_else(|| usage(format!("--format: unknown format {format:?}")))?;
    }
    if let Some(clusters) = shared.clusters {
        settings.clusters = clusters;
    }
    if let Some(round_length) = shared.round_length {
        settings.round_length = round_length;
    }
    if let Some(max_neighbors) = shared.max_neighbors {
        settings.max_neighbors = max_neighbors;
    }
    if let Some(max_iterations) = shared.max_iterations {
        settings.max_iterations = max_iterations;
    }
    settings.validate().map_err(|e| usage(e.to_string()))?;
    Ok(settings)
}

/// Reject strategy knobs passed as flags for strategies that ignore them.
/// Config-file values are shared defaults and are exempt; an explicit flag
/// that would do nothing is treated as a mistake.
fn check_knob_flags(shared: &SharedArgs, strategies: &[StrategyKind]) -> Result<(), CliError> {
    let names = || {
        strategies
            .iter()
            .map(|s| s.name())
            .collect::<Vec<_>>()
            .join(", ")
    };
    if shared.clusters.is_some() && !strategies.iter().any(|s| s.is_clustering()) {
        return Err(usage(format!("--clusters does not apply to {}", names())));
    }
    if shared.round_length.is_some()
        && !strategies.contains(&StrategyKind::RandomClustering)
    {
        return Err(usage(format!(
            "--round-length does not apply to {}",
            names()
        )));
    }
    if shared.max_neighbors.is_some() && !strategies.iter().any(|s| s.uses_neighbor_tables()) {
        return Err(usage(format!(
            "--max-neighbors does not apply to {}",
            names()
        )));
    }
    Ok(())
}

fn parse_algo(name: &str) -> Result<StrategyKind, CliError> {
    StrategyKind::parse(name).ok_or_else(|| {
        let known = StrategyKind::ALL
            .iter()
            .map(|s| s.name())
            .collect::<Vec<_>>()
            .join(", ");
        usage(format!("unknown algorithm {name:?} (expected one of: {known})"))
    })
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut settings = resolve_settings(&args.shared)?;
    if let Some(seed) = args.seed {
        settings.seed = seed;
    }
    let strategy = match &args.algo {
        Some(name) => parse_algo(name)?,
        None => settings
            .algo
            .ok_or_else(|| usage("missing --algo (and no algo in the config file)"))?,
    };
    check_knob_flags(&args.shared, &[strategy])?;

    let topo = match &args.topology {
        Some(path) => Topology::read_csv(path)
            .map_err(|e| runtime(format!("{}: {e}", path.display())))?,
        None => Topology::generate(
            settings.nodes,
            settings.width,
            settings.height,
            settings.base(),
            settings.seed,
        )
        .map_err(|e| usage(e.to_string()))?,
    };

    let cfg = settings.sim_config(strategy, settings.seed);
    let result = if args.verbose {
        let stdout = io::stdout();
        let mut sink = WriterSink::new(BufWriter::new(stdout.lock()));
        let result = run_simulation(&topo, &cfg, &mut sink);
        sink.finish()
            .map_err(|e| runtime(format!("writing trace: {e}")))?;
        result
    } else {
        run_simulation(&topo, &cfg, &mut NullSink)
    };

    fs::create_dir_all(&args.out)
        .map_err(|e| runtime(format!("{}: {e}", args.out.display())))?;
    export(&topo, &result, settings.format, &args.out)
        .map_err(|e| runtime(e.to_string()))?;

    let summary = RunSummary::of(&result);
    let mut line = format!(
        "run complete: algo={} seed={} nodes={} iterations={}",
        strategy,
        cfg.seed,
        topo.node_count(),
        result.iterations_run
    );
    let opt = |v: Option<String>| v.unwrap_or_else(|| "censored".into());
    line.push_str(&format!(
        " first_death={} system_lifetime={} utility_fraction={}",
        opt(summary.first_death.map(|v| v.to_string())),
        opt(summary.system_lifetime.map(|v| v.to_string())),
        opt(summary.utility_fraction.map(|v| format!("{v:.4}"))),
    ));
    line.push_str(&format!(
        " delivered={} dropped={} sync_messages={} -> {}",
        summary.delivered,
        summary.dropped,
        summary.sync_messages,
        args.out.display()
    ));
    println!("{line}");
    Ok(())
}

fn cmd_batch(args: BatchArgs) -> Result<(), CliError> {
    let settings = resolve_settings(&args.shared)?;
    let strategies = match &args.strategies {
        None => StrategyKind::ALL.to_vec(),
        Some(list) => list
            .split(',')
            .map(|name| parse_algo(name.trim()))
            .collect::<Result<Vec<_>, _>>()?,
    };
    check_knob_flags(&args.shared, &strategies)?;

    let spec = BatchSpec {
        topologies: args.topologies,
        seeds_per_topology: args.seeds,
        strategies,
        base_seed: args.base_seed,
        output_dir: args.out.clone(),
    };
    let report = run_batch(&spec, &settings).map_err(|e| match e {
        BatchError::Invalid(_) => usage(e.to_string()),
        _ => runtime(e.to_string()),
    })?;
    println!(
        "batch complete: {} runs -> {}",
        report.runs,
        report.summary_path.display()
    );
    Ok(())
}
