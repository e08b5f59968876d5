//! Cluster formation: random head election with nearest-head membership,
//! and the omniscient variant that runs k-means over live node positions
//! and crowns the member that is cheapest to reach as head.
//!
//! Both produce a [`ClusterAssignment`] mapping every live node to its
//! head. All tie-breaks resolve to the lowest node id (or lowest cluster
//! index), so the same inputs always produce the same clusters.

use crate::rng::SplitMix64;
use crate::topology::{Position, Topology};

/// k-means sweeps before giving up on convergence.
const MAX_SWEEPS: usize = 100;

/// Heads plus the head every live node reports to. Heads report to
/// themselves; dead nodes report to nobody.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    heads: Vec<usize>,
    member_head: Vec<Option<usize>>,
}

impl ClusterAssignment {
    /// Build membership for an already-elected head set: every live
    /// non-head joins the nearest head, ties to the lowest head id.
    ///
    /// `heads` must be sorted ascending; `alive_ids` ascending and not
    /// empty unless `heads` is too.
    pub fn from_heads(topo: &Topology, alive_ids: &[usize], heads: Vec<usize>) -> Self {
        debug_assert!(heads.windows(2).all(|w| w[0] < w[1]));
        assert!(
            !heads.is_empty() || alive_ids.is_empty(),
            "live nodes need at least one head to join"
        );
        let mut member_head = vec![None; topo.node_count()];
        for &h in &heads {
            member_head[h] = Some(h);
        }
        for &id in alive_ids {
            if member_head[id].is_some() {
                continue;
            }
            let mut best = heads[0];
            let mut best_d = topo.distance(id, best).expect("head exists");
            for &h in &heads[1..] {
                let d = topo.distance(id, h).expect("head exists");
                if d < best_d {
                    best = h;
                    best_d = d;
                }
            }
            member_head[id] = Some(best);
        }
        Self { heads, member_head }
    }

    /// Elected heads, ascending.
    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn is_head(&self, node: usize) -> bool {
        self.member_head[node] == Some(node)
    }

    /// Head the node reports to; `None` for dead nodes.
    pub fn head_of(&self, node: usize) -> Option<usize> {
        self.member_head[node]
    }

    /// Members reporting to `head`, ascending, excluding the head itself.
    pub fn members_of(&self, head: usize) -> Vec<usize> {
        self.member_head
            .iter()
            .enumerate()
            .filter(|&(id, &h)| h == Some(head) && id != head)
            .map(|(id, _)| id)
            .collect()
    }
}

/// Draw the first `k` of a partial Fisher-Yates shuffle: a uniform sample
/// without replacement.
fn sample_without_replacement(ids: &[usize], k: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let mut pool = ids.to_vec();
    for i in 0..k {
        let j = i + rng.next_index(pool.len() - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Elect `k` heads uniformly at random from the live nodes, clamping `k`
/// to the live count. Returns the heads sorted ascending.
pub fn random_cluster_elect(alive_ids: &[usize], k: usize, rng: &mut SplitMix64) -> Vec<usize> {
    let k = k.min(alive_ids.len());
    if k == 0 {
        return Vec::new();
    }
    let mut heads = sample_without_replacement(alive_ids, k, rng);
    heads.sort_unstable();
    heads
}

/// Energy a candidate head would sink collecting one report from every
/// other member, weighted by how much battery it has left to pay for it.
/// A candidate with nothing left costs infinitely much.
pub fn clustroid_cost(
    candidate: usize,
    members: &[usize],
    topo: &Topology,
    pf_candidate: f64,
) -> f64 {
    if pf_candidate <= 0.0 {
        return f64::INFINITY;
    }
    let mut sum = 0.0;
    for &m in members {
        if m == candidate {
            continue;
        }
        let d = topo.distance(m, candidate).expect("member exists");
        sum += d * d;
    }
    sum / pf_candidate
}

fn dist2(a: Position, b: Position) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

/// Cluster the live nodes with k-means and pick each cluster's head by
/// lowest [`clustroid_cost`].
///
/// Centroids start on `k` distinct live node positions drawn from `rng`.
/// Each sweep assigns every live node to its nearest centroid (ties to the
/// lowest cluster index), then refills any empty cluster with the live node
/// farthest from that cluster's stale centroid — stealing only from
/// clusters that keep at least one member, ties to the lowest id — and
/// finally moves each centroid to the mean of its members. Sweeps stop
/// when the post-refill assignment repeats, or after [`MAX_SWEEPS`].
///
/// `alive_ids` must be sorted ascending.
pub fn ideal_cluster_assign(
    topo: &Topology,
    alive_ids: &[usize],
    power_fraction: &[f64],
    k: usize,
    rng: &mut SplitMix64,
) -> ClusterAssignment {
    debug_assert!(alive_ids.windows(2).all(|w| w[0] < w[1]));
    let n = alive_ids.len();
    if n == 0 {
        return ClusterAssignment {
            heads: Vec::new(),
            member_head: vec![None; topo.node_count()],
        };
    }
    let k = k.clamp(1, n);

    let seeds = sample_without_replacement(alive_ids, k, rng);
    let mut centroids: Vec<Position> = seeds.iter().map(|&id| topo.position(id)).collect();
    let mut assign = vec![0usize; n];
    let mut prev: Option<Vec<usize>> = None;

    for _ in 0..MAX_SWEEPS {
        for (i, &id) in alive_ids.iter().enumerate() {
            let p = topo.position(id);
            let mut best = 0;
            let mut best_d = dist2(p, centroids[0]);
            for (ci, &c) in centroids.iter().enumerate().skip(1) {
                let d = dist2(p, c);
                if d < best_d {
                    best = ci;
                    best_d = d;
                }
            }
            assign[i] = best;
        }

        let mut counts = vec![0usize; k];
        for &a in &assign {
            counts[a] += 1;
        }
        for ci in 0..k {
            if counts[ci] > 0 {
                continue;
            }
            let mut pick: Option<(usize, f64)> = None;
            for (i, &id) in alive_ids.iter().enumerate() {
                if counts[assign[i]] < 2 {
                    continue;
                }
                let d = dist2(topo.position(id), centroids[ci]);
                if pick.map_or(true, |(_, best)| d > best) {
                    pick = Some((i, d));
                }
            }
            // k <= n, so an empty cluster implies some other cluster holds
            // at least two members.
            let (i, _) = pick.expect("donor cluster exists");
            counts[assign[i]] -= 1;
            assign[i] = ci;
            counts[ci] = 1;
        }

        if prev.as_deref() == Some(&assign[..]) {
            break;
        }
        prev = Some(assign.clone());

        let mut sums = vec![(0.0f64, 0.0f64); k];
        for (i, &id) in alive_ids.iter().enumerate() {
            let p = topo.position(id);
            sums[assign[i]].0 += p.x;
            sums[assign[i]].1 += p.y;
        }
        for ci in 0..k {
            centroids[ci] = Position {
                x: sums[ci].0 / counts[ci] as f64,
                y: sums[ci].1 / counts[ci] as f64,
            };
        }
    }

    let mut member_head = vec![None; topo.node_count()];
    let mut heads = Vec::with_capacity(k);
    for ci in 0..k {
        let members: Vec<usize> = alive_ids
            .iter()
            .enumerate()
            .filter(|&(i, _)| assign[i] == ci)
            .map(|(_, &id)| id)
            .collect();
        let mut best = members[0];
        let mut best_cost = clustroid_cost(best, &members, topo, power_fraction[best]);
        for &c in &members[1..] {
            let cost = clustroid_cost(c, &members, topo, power_fraction[c]);
            if cost < best_cost {
                best = c;
                best_cost = cost;
            }
        }
        heads.push(best);
        for &m in &members {
            member_head[m] = Some(best);
        }
    }
    heads.sort_unstable();
    ClusterAssignment { heads, member_head }
}
