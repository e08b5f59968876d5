//! The six routing strategies the simulator compares.
//!
//! Each strategy answers one question per packet: given the sender, where
//! does the packet go next? The engine owns energy accounting and death
//! handling; strategy code here is pure decision logic over topology,
//! liveness, and battery state, which keeps it directly testable against
//! small hand-checked instances.

mod cluster;
mod diffusion;
mod e3d;
mod ideal_diffusion;

pub use cluster::{ideal_cluster_assign, random_cluster_elect, clustroid_cost, ClusterAssignment};
pub use diffusion::diffusion_select;
pub use e3d::{receive_check, E3dNodeState, E3dThresholds, ExceptionMessage, ExceptionReason};
pub use ideal_diffusion::{best_parent, ideal_diffusion_plan, RoutingTree};

use std::fmt;

use serde::Serialize;

/// Where a packet is sent next: a relay node or straight to the base
/// station. The base has no battery, so it is not a node id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Destination {
    Node(usize),
    Base,
}

impl fmt::Display for Destination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Destination::Node(id) => write!(f, "n{id}"),
            Destination::Base => write!(f, "base"),
        }
    }
}

/// Identifies one of the six routing strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Direct,
    BasicDiffusion,
    E3d,
    IdealDiffusion,
    RandomClustering,
    IdealClustering,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Direct,
        StrategyKind::BasicDiffusion,
        StrategyKind::E3d,
        StrategyKind::IdealDiffusion,
        StrategyKind::RandomClustering,
        StrategyKind::IdealClustering,
    ];

    /// Name used on the command line and in exported files.
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Direct => "direct",
            StrategyKind::BasicDiffusion => "diffusion",
            StrategyKind::E3d => "e3d",
            StrategyKind::IdealDiffusion => "ideal-diffusion",
            StrategyKind::RandomClustering => "random-cluster",
            StrategyKind::IdealClustering => "ideal-cluster",
        }
    }

    pub fn parse(name: &str) -> Option<StrategyKind> {
        StrategyKind::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Index into [`StrategyKind::ALL`]; part of the batch seed derivation,
    /// so it must stay stable.
    pub fn index(self) -> usize {
        StrategyKind::ALL
            .iter()
            .position(|&s| s == self)
            .expect("strategy listed in ALL")
    }

    /// Idealized strategies replan from global knowledge every iteration and
    /// pay no synchronization cost.
    pub fn is_ideal(self) -> bool {
        matches!(
            self,
            StrategyKind::IdealDiffusion | StrategyKind::IdealClustering
        )
    }

    /// Strategies that build per-node neighbor tables during setup.
    pub fn uses_neighbor_tables(self) -> bool {
        matches!(self, StrategyKind::BasicDiffusion | StrategyKind::E3d)
    }

    pub fn is_clustering(self) -> bool {
        matches!(
            self,
            StrategyKind::RandomClustering | StrategyKind::IdealClustering
        )
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
