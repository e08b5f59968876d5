//! Multi-topology, multi-seed experiment batches.
//!
//! A batch sweeps `topologies x seeds_per_topology x strategies` runs.
//! Every strategy sees bit-identical topologies per topology index, and
//! every run's seed is derived from the base seed by a fixed documented
//! formula, so a batch is reproducible from its spec alone. Runs may
//! execute in parallel; results are reduced in sorted key order, so the
//! summary file comes out byte-identical either way.

use std::fs;
use std::io;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::config::Settings;
use crate::engine::run_simulation;
use crate::export::{export, RunSummary};
use crate::strategies::StrategyKind;
use crate::topology::Topology;
use crate::trace::NullSink;

/// What to sweep and where to put it.
#[derive(Debug, Clone)]
pub struct BatchSpec {
    pub topologies: usize,
    pub seeds_per_topology: usize,
    pub strategies: Vec<StrategyKind>,
    pub base_seed: u64,
    pub output_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("invalid batch: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("failed to write {path}: {message}")]
    WriteFailed { path: PathBuf, message: String },
    #[error("{failed} of {total} runs failed:\n{details}")]
    RunsFailed {
        failed: usize,
        total: usize,
        details: String,
    },
}

/// Seed that generates topology `topology_index`; identical for every
/// strategy and seed index, so the whole batch shares its fields.
pub fn topology_seed(base_seed: u64, topology_index: usize) -> u64 {
    base_seed
        .wrapping_mul(1_000_003)
        .wrapping_add((topology_index as u64).wrapping_mul(1_009))
}

/// Engine seed for one run: the topology seed plus fixed per-axis strides.
/// The strategy stride uses the strategy's global index, so adding or
/// removing strategies from a batch never changes the other runs' seeds.
pub fn run_seed(
    base_seed: u64,
    topology_index: usize,
    seed_index: usize,
    strategy: StrategyKind,
) -> u64 {
    topology_seed(base_seed, topology_index)
        .wrapping_add((seed_index as u64).wrapping_mul(101))
        .wrapping_add(strategy.index() as u64)
}

/// Name of one run's export directory under the batch output directory.
pub fn run_dir_name(topology_index: usize, seed_index: usize, strategy: StrategyKind) -> String {
    format!("t{topology_index:03}_s{seed_index:02}_{strategy}")
}

#[derive(Debug)]
pub struct BatchReport {
    pub runs: usize,
    pub summary_path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct RunKey {
    topology_index: usize,
    seed_index: usize,
    strategy_index: usize,
}

/// Execute a batch: per-run export directories, one topology file per
/// topology index, and `batch_summary.csv` holding every run's summary
/// row plus a per-strategy aggregate block.
///
/// If some runs fail, the summary rows of the completed runs are still
/// written before the error is returned.
pub fn run_batch(spec: &BatchSpec, settings: &Settings) -> Result<BatchReport, BatchError> {
    if spec.topologies == 0 || spec.seeds_per_topology == 0 {
        return Err(BatchError::Invalid(
            "topologies and seeds_per_topology must be at least 1".into(),
        ));
    }
    if spec.strategies.is_empty() {
        return Err(BatchError::Invalid("no strategies selected".into()));
    }
    let mut seen = [false; StrategyKind::ALL.len()];
    for &strategy in &spec.strategies {
        if seen[strategy.index()] {
            return Err(BatchError::Invalid(format!(
                "strategy {strategy} listed twice"
            )));
        }
        seen[strategy.index()] = true;
    }
    settings
        .validate()
        .map_err(|e| BatchError::Invalid(e.to_string()))?;

    fs::create_dir_all(&spec.output_dir).map_err(|source| BatchError::Io {
        path: spec.output_dir.clone(),
        source,
    })?;

    // One topology per index, shared verbatim by every strategy and seed.
    let mut topologies = Vec::with_capacity(spec.topologies);
    for ti in 0..spec.topologies {
        let topo = Topology::generate(
            settings.nodes,
            settings.width,
            settings.height,
            settings.base(),
            topology_seed(spec.base_seed, ti),
        )
        .map_err(|e| BatchError::Invalid(e.to_string()))?;
        let path = spec.output_dir.join(format!("topology_t{ti:03}.csv"));
        topo.write_csv(&path).map_err(|e| BatchError::WriteFailed {
            path: path.clone(),
            message: e.to_string(),
        })?;
        topologies.push(topo);
    }

    let mut keys = Vec::new();
    for ti in 0..spec.topologies {
        for si in 0..spec.seeds_per_topology {
            for &strategy in &spec.strategies {
                keys.push(RunKey {
                    topology_index: ti,
                    seed_index: si,
                    strategy_index: strategy.index(),
                });
            }
        }
    }

    let mut outcomes: Vec<(RunKey, Result<RunSummary, String>)> = keys
        .par_iter()
        .map(|&key| {
            let strategy = StrategyKind::ALL[key.strategy_index];
            let outcome = run_one(spec, settings, &topologies[key.topology_index], key, strategy);
            (key, outcome)
        })
        .collect();
    outcomes.sort_by_key(|(key, _)| *key);

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (key, outcome) in &outcomes {
        match outcome {
            Ok(summary) => rows.push(summary.clone()),
            Err(message) => failures.push(format!(
                "{}: {message}",
                run_dir_name(
                    key.topology_index,
                    key.seed_index,
                    StrategyKind::ALL[key.strategy_index]
                )
            )),
        }
    }

    // Flush whatever completed before reporting any failure.
    let summary_path = spec.output_dir.join("batch_summary.csv");
    let text = batch_summary_csv(&rows, &spec.strategies);
    fs::write(&summary_path, text).map_err(|source| BatchError::Io {
        path: summary_path.clone(),
        source,
    })?;

    if !failures.is_empty() {
        return Err(BatchError::RunsFailed {
            failed: failures.len(),
            total: keys.len(),
            details: failures.join("\n"),
        });
    }
    Ok(BatchReport {
        runs: rows.len(),
        summary_path,
    })
}

fn run_one(
    spec: &BatchSpec,
    settings: &Settings,
    topo: &Topology,
    key: RunKey,
    strategy: StrategyKind,
) -> Result<RunSummary, String> {
    let seed = run_seed(spec.base_seed, key.topology_index, key.seed_index, strategy);
    let cfg = settings.sim_config(strategy, seed);
    let result = run_simulation(topo, &cfg, &mut NullSink);
    let dir = spec
        .output_dir
        .join(run_dir_name(key.topology_index, key.seed_index, strategy));
    fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    export(topo, &result, settings.format, &dir).map_err(|e| e.to_string())?;
    Ok(RunSummary::of(&result))
}

/// Render the batch summary: every run's row (same header and shape as a
/// single run's `summary.csv`), then a `#`-prefixed per-strategy aggregate
/// block that plain CSV readers skip as comments.
pub fn batch_summary_csv(rows: &[RunSummary], strategies: &[StrategyKind]) -> String {
    let mut out = String::from(RunSummary::CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    out.push_str("# aggregate strategy,metric,count,mean,min,max\n");
    let mut order: Vec<StrategyKind> = strategies.to_vec();
    order.sort_by_key(|s| s.index());
    for strategy in order {
        let of_strategy: Vec<&RunSummary> =
            rows.iter().filter(|r| r.strategy == strategy).collect();
        let first_death: Vec<f64> = of_strategy
            .iter()
            .filter_map(|r| r.first_death.map(|v| v as f64))
            .collect();
        let system_lifetime: Vec<f64> = of_strategy
            .iter()
            .filter_map(|r| r.system_lifetime.map(|v| v as f64))
            .collect();
        let utility: Vec<f64> = of_strategy
            .iter()
            .filter_map(|r| r.utility_fraction)
            .collect();
        out.push_str(&aggregate_line(strategy, "first_death", &first_death));
        out.push_str(&aggregate_line(strategy, "system_lifetime", &system_lifetime));
        out.push_str(&aggregate_line(strategy, "utility_fraction", &utility));
    }
    out
}

fn aggregate_line(strategy: StrategyKind, metric: &str, values: &[f64]) -> String {
    if values.is_empty() {
        return format!("# {strategy},{metric},0,,,\n");
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    format!(
        "# {strategy},{metric},{},{mean},{min},{max}\n",
        values.len()
    )
}
