//! Lifetime and fairness measurements over a finished run.
//!
//! Two numbers summarize a run: when the first node died and when the
//! last one did. Their ratio - the utility fraction - captures how evenly
//! the strategy spread the load: a fraction near 1 means the network
//! worked at full strength almost until the end, near 0 means it limped
//! along on a shrinking remnant. The death-distance correlation then
//! shows *which* nodes a strategy sacrifices: negative means the far nodes
//! die first, positive means the near relays burn out.

use serde::Serialize;

use crate::engine::SimulationResult;
use crate::topology::Topology;

/// Headline numbers for one run. All `Option` fields are `None` when the
/// run was censored (the iteration cap fired with nodes still alive),
/// except `first_death`, which is reported whenever any node died.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifetimeSummary {
    /// Iteration of the first death.
    pub first_death: Option<u64>,
    /// Iteration of the last death; the network is dead afterwards.
    pub system_lifetime: Option<u64>,
    /// `first_death / system_lifetime`: the fraction of the network's
    /// lifetime spent at full strength. 1.0 when every node died at once.
    pub utility_fraction: Option<f64>,
    /// `1 - utility_fraction`: how drawn out the die-off was.
    pub death_spread: Option<f64>,
    pub censored: bool,
}

/// Summarize a run's death record.
pub fn lifetime_summary(result: &SimulationResult) -> LifetimeSummary {
    let first_death = result.death_iteration.iter().flatten().min().copied();
    if result.censored {
        return LifetimeSummary {
            first_death,
            system_lifetime: None,
            utility_fraction: None,
            death_spread: None,
            censored: true,
        };
    }
    let last = *result
        .death_iteration
        .iter()
        .flatten()
        .max()
        .expect("uncensored runs have at least one death");
    let first = first_death.expect("uncensored runs have at least one death");
    let utility = if last == 0 {
        // Everyone died during setup; trivially balanced.
        1.0
    } else {
        first as f64 / last as f64
    };
    LifetimeSummary {
        first_death: Some(first),
        system_lifetime: Some(last),
        utility_fraction: Some(utility),
        death_spread: Some(1.0 - utility),
        censored: false,
    }
}

/// Percent of nodes alive over time as a step function: one point at
/// iteration 0 and one per iteration that saw deaths.
pub fn utility_curve(result: &SimulationResult) -> Vec<(u64, f64)> {
    let n = result.node_count() as f64;
    result
        .alive_curve
        .iter()
        .map(|&(it, alive)| (it, alive as f64 * 100.0 / n))
        .collect()
}

/// Spearman rank correlation between distance-to-base and death
/// iteration, over dead nodes only. `None` with fewer than 3 deaths -
/// too little data to call an ordering.
pub fn death_distance_correlation(result: &SimulationResult, topo: &Topology) -> Option<f64> {
    let mut dists = Vec::new();
    let mut deaths = Vec::new();
    for (node, death) in result.death_iteration.iter().enumerate() {
        if let Some(it) = death {
            dists.push(topo.dist_to_base(node));
            deaths.push(*it as f64);
        }
    }
    if dists.len() < 3 {
        return None;
    }
    Some(spearman(&dists, &deaths))
}

/// Spearman rank correlation with mid-ranks for ties: Pearson correlation
/// of the two rank vectors. Returns 0.0 when either side has no variance
/// (all values tied).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "paired samples required");
    pearson(&ranks(x), &ranks(y))
}

/// Mid-ranks: equal values share the average of the ranks they occupy.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) hold ranks i+1..=j+1; everyone in the
        // tie gets the average.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cov += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        return 0.0;
    }
    // Single sqrt keeps perfect orderings at exactly +/-1: when the rank
    // vectors agree, cov == var_a == var_b and sqrt(v * v) == v in IEEE
    // round-to-nearest.
    cov / (var_a * var_b).sqrt()
}
