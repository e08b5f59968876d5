//! Deterministic round-based simulator for energy-constrained wireless
//! sensor networks.
//!
//! Nodes on a rectangular field each produce one data packet per iteration
//! and spend battery on every transmission and receipt under a
//! distance-squared radio model. Six routing strategies — from naive
//! direct-to-base through receiver-policed diffusion to omniscient
//! planners — compete on how long they keep the network alive and how
//! evenly its nodes die.
//!
//! The crate is organized bottom-up:
//!
//! - [`rng`]: the portable pseudo-random stream behind placement and
//!   elections;
//! - [`topology`]: node placement, distances, neighbor tables, CSV I/O;
//! - [`energy`]: the radio cost model and per-node batteries;
//! - [`strategies`]: pure routing/clustering decision logic;
//! - [`engine`]: the round loop that owns queues, charges, and death;
//! - [`trace`]: the event stream every run emits.
//!
//! Every run is a pure function of its configuration and seed: identical
//! inputs give byte-identical traces and exports.

pub mod batch;
pub mod config;
pub mod energy;
pub mod engine;
pub mod export;
pub mod metrics;
pub mod replay;
pub mod rng;
pub mod strategies;
pub mod topology;
pub mod trace;

pub use batch::{run_batch, BatchReport, BatchSpec};
pub use config::{parse_area, ConfigError, Settings};
pub use energy::{Battery, DrainOutcome, EnergyParams};
pub use engine::{run_simulation, SimConfig, SimulationResult};
pub use export::{export, ExportFormat, RunSummary};
pub use metrics::{
    death_distance_correlation, lifetime_summary, spearman, utility_curve, LifetimeSummary,
};
pub use replay::ReplayChecker;
pub use rng::SplitMix64;
pub use strategies::{Destination, StrategyKind};
pub use topology::{Position, Topology};
pub use trace::{TraceEvent, TraceSink};
