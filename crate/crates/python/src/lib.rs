//! Python bindings for the wsnsim core: run simulations, inspect lifetime
//! metrics, and export results from Python.
//!
//! Build the importable module with
//! `cargo build --release -p wsnsim-python --features extension-module`
//! and rename `libwsnsim.so` to `wsnsim.so` (see `python/smoke_test.py`).

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use wsnsim_core::config::Settings;
use wsnsim_core::engine::{run_simulation, SimulationResult, DEFAULT_MAX_ITERATIONS};
use wsnsim_core::export::{self, ExportFormat};
use wsnsim_core::metrics::{death_distance_correlation, lifetime_summary};
use wsnsim_core::strategies::StrategyKind;
use wsnsim_core::topology::Topology;
use wsnsim_core::trace::NullSink;

fn parse_strategy(name: &str) -> PyResult<StrategyKind> {
    StrategyKind::parse(name).ok_or_else(|| {
        let names: Vec<&str> = StrategyKind::ALL.iter().map(|s| s.name()).collect();
        PyValueError::new_err(format!(
            "unknown algorithm {name:?}; expected one of {}",
            names.join(", ")
        ))
    })
}

/// Completed simulation: summary metrics, per-node outcomes, and exports.
#[pyclass(frozen)]
struct SimResult {
    topo: Topology,
    result: SimulationResult,
}

#[pymethods]
impl SimResult {
    /// Algorithm name, e.g. "e3d".
    #[getter]
    fn algo(&self) -> &'static str {
        self.result.strategy.name()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.result.seed
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.topo.node_count()
    }

    /// Iterations actually simulated.
    #[getter]
    fn iterations(&self) -> u64 {
        self.result.iterations_run
    }

    /// True when the run hit the iteration cap with nodes still alive.
    #[getter]
    fn censored(&self) -> bool {
        self.result.censored
    }

    /// Iteration of the first node death, or None.
    #[getter]
    fn first_death(&self) -> Option<u64> {
        lifetime_summary(&self.result).first_death
    }

    /// Iteration of the last node death, or None while censored.
    #[getter]
    fn system_lifetime(&self) -> Option<u64> {
        lifetime_summary(&self.result).system_lifetime
    }

    /// Fraction of the system lifetime spent with every node alive.
    #[getter]
    fn utility_fraction(&self) -> Option<f64> {
        lifetime_summary(&self.result).utility_fraction
    }

    /// Fraction of the system lifetime between first and last death.
    #[getter]
    fn death_spread(&self) -> Option<f64> {
        lifetime_summary(&self.result).death_spread
    }

    /// Rank correlation between death order and distance to the base.
    #[getter]
    fn death_distance_correlation(&self) -> Option<f64> {
        death_distance_correlation(&self.result, &self.topo)
    }

    #[getter]
    fn generated(&self) -> u64 {
        self.result.generated
    }

    #[getter]
    fn delivered(&self) -> u64 {
        self.result.delivered
    }

    #[getter]
    fn dropped(&self) -> u64 {
        self.result.dropped
    }

    #[getter]
    fn sync_messages(&self) -> u64 {
        self.result.sync_messages
    }

    /// (iteration, alive-count) points, recorded whenever the count drops.
    #[getter]
    fn alive_curve(&self) -> Vec<(u64, usize)> {
        self.result.alive_curve.clone()
    }

    /// Per-node death iteration, None for survivors.
    #[getter]
    fn death_iterations(&self) -> Vec<Option<u64>> {
        self.result.death_iteration.clone()
    }

    /// Per-node remaining battery energy in joules.
    #[getter]
    fn remaining_energy(&self) -> Vec<f64> {
        self.result.remaining.clone()
    }

    /// Node coordinates as (x, y) pairs.
    #[getter]
    fn positions(&self) -> Vec<(f64, f64)> {
        (0..self.topo.node_count())
            .map(|i| {
                let p = self.topo.position(i);
                (p.x, p.y)
            })
            .collect()
    }

    /// Write the run's files (`nodes.csv`, `curve.csv`, `summary.csv` or
    /// `result.json`) into `dir`.
    #[pyo3(signature = (dir, format = "csv"))]
    fn export(&self, dir: PathBuf, format: &str) -> PyResult<()> {
        let format = ExportFormat::parse(format)
            .ok_or_else(|| PyValueError::new_err(format!("unknown format {format:?}; expected csv or json")))?;
        export::export(&self.topo, &self.result, format, &dir)
            .map_err(|e| PyRuntimeError::new_err(format!("export to {} failed: {e}", dir.display())))
    }

    /// The full JSON export as a string.
    fn to_json(&self) -> String {
        export::result_json(&self.topo, &self.result)
    }

    fn __repr__(&self) -> String {
        let summary = lifetime_summary(&self.result);
        let fmt_opt = |v: Option<u64>| v.map_or("None".to_string(), |v| v.to_string());
        format!(
            "<SimResult algo={} nodes={} seed={} iterations={} first_death={} system_lifetime={}>",
            self.algo(),
            self.node_count(),
            self.seed(),
            self.iterations(),
            fmt_opt(summary.first_death),
            fmt_opt(summary.system_lifetime),
        )
    }
}

/// Run one simulation and return its `SimResult`.
///
/// `topology_path` loads a topology CSV (as written by the CLI) instead of
/// generating one from `nodes`/`width`/`height`/`seed`.
#[pyfunction]
#[pyo3(signature = (
    algo,
    *,
    nodes = 100,
    width = 100.0,
    height = 100.0,
    seed = 1,
    clusters = 5,
    round_length = 20,
    max_neighbors = 8,
    max_iterations = DEFAULT_MAX_ITERATIONS,
    topology_path = None,
))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    algo: &str,
    nodes: usize,
    width: f64,
    height: f64,
    seed: u64,
    clusters: usize,
    round_length: u64,
    max_neighbors: usize,
    max_iterations: u64,
    topology_path: Option<PathBuf>,
) -> PyResult<SimResult> {
    let strategy = parse_strategy(algo)?;
    let mut settings = Settings::default();
    settings.nodes = nodes;
    settings.width = width;
    settings.height = height;
    settings.seed = seed;
    settings.clusters = clusters;
    settings.round_length = round_length;
    settings.max_neighbors = max_neighbors;
    settings.max_iterations = max_iterations;
    settings
        .validate()
        .map_err(|e| PyValueError::new_err(e.to_string()))?;

    let topo = match topology_path {
        Some(path) => Topology::read_csv(&path)
            .map_err(|e| PyRuntimeError::new_err(format!("loading {}: {e}", path.display())))?,
        None => Topology::generate(nodes, width, height, settings.base(), seed)
            .map_err(|e| PyValueError::new_err(e.to_string()))?,
    };

    let cfg = settings.sim_config(strategy, seed);
    let result = run_simulation(&topo, &cfg, &mut NullSink);
    Ok(SimResult { topo, result })
}

/// Names accepted by `simulate`'s `algo` argument, in canonical order.
#[pyfunction]
fn strategies() -> Vec<&'static str> {
    StrategyKind::ALL.iter().map(|s| s.name()).collect()
}

/// Generate a uniform random topology and return it as CSV text.
#[pyfunction]
#[pyo3(signature = (nodes = 100, width = 100.0, height = 100.0, seed = 1))]
fn generate_topology_csv(nodes: usize, width: f64, height: f64, seed: u64) -> PyResult<String> {
    let base = Settings::default().base();
    Topology::generate(nodes, width, height, base, seed)
        .map(|t| t.to_csv())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn wsnsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<SimResult>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(strategies, m)?)?;
    m.add_function(wrap_pyfunction!(generate_topology_csv, m)?)?;
    Ok(())
}
