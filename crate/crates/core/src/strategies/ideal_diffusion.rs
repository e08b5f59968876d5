//! Omniscient diffusion planner. Each iteration it rebuilds, for free, the
//! best next hop of every live node from global knowledge of positions and
//! remaining energy.
//!
//! For sender `s` the candidate set is every live node strictly closer to
//! the base than `s`, plus the base itself. A relay `c` costs
//! `d(s,c)^2 / pf(c) + d(c,B)^2` - the first term punishes drained relays,
//! the second keeps routes short - while the base costs a flat `d(s,B)^2`.
//! Ties prefer the base, then the lowest node id, so plans are deterministic.

use crate::topology::Topology;

use super::Destination;

/// One parent per node; dead nodes have none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingTree {
    parents: Vec<Option<Destination>>,
}

impl RoutingTree {
    pub fn parent(&self, node: usize) -> Option<Destination> {
        self.parents[node]
    }
}

/// Cheapest destination for `s` under the current energy state.
///
/// `power_fraction[c]` is remaining/initial for node `c`; entries at or
/// below zero are skipped outright (a relay with nothing left is no relay).
pub fn best_parent(
    topo: &Topology,
    alive: &[bool],
    power_fraction: &[f64],
    s: usize,
) -> Destination {
    let d_base = topo.dist_to_base(s);
    let mut best = Destination::Base;
    let mut best_cost = d_base * d_base;
    for c in 0..topo.node_count() {
        if c == s || !alive[c] || power_fraction[c] <= 0.0 {
            continue;
        }
        let c_base = topo.dist_to_base(c);
        if c_base >= d_base {
            continue;
        }
        let d_sc = topo.distance(s, c).expect("both nodes exist");
        let cost = d_sc * d_sc / power_fraction[c] + c_base * c_base;
        // Strict improvement only: on a tie the earlier candidate wins, and
        // the base is considered before any node.
        if cost < best_cost {
            best = Destination::Node(c);
            best_cost = cost;
        }
    }
    best
}

/// Plan every live node's parent for one iteration.
pub fn ideal_diffusion_plan(topo: &Topology, alive: &[bool], power_fraction: &[f64]) -> RoutingTree {
    let parents = (0..topo.node_count())
        .map(|s| alive[s].then(|| best_parent(topo, alive, power_fraction, s)))
        .collect();
    RoutingTree { parents }
}
