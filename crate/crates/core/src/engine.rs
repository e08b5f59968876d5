//! The round-based engine: owns batteries, queues, and death, and drives
//! whichever routing strategy the configuration names.
//!
//! Each iteration proceeds in three phases:
//!
//! 1. **Strategy bookkeeping.** Omniscient strategies replan for free;
//!    random clustering holds its paid election at the top of each round.
//! 2. **Generation.** Every live node produces exactly one data packet.
//! 3. **Forwarding.** Nodes take turns in decreasing distance from the
//!    base (ties to the lower id) and empty their queue one packet at a
//!    time. Relay receivers sit strictly closer to the base, so their turn
//!    is always still to come; cluster heads are the one exception and
//!    instead relay each receipt to the base the moment it arrives.
//!
//! Senders pay for every transmission, including ones that reach nobody
//! because the target died: the sender then picks a new destination and
//! retries the same packet. A node that cannot afford an action dies with
//! the leftover charge stranded in its battery and its queue is dropped; a
//! node whose battery lands on exactly zero finishes that action first and
//! then dies. Packets never outlive the iteration that generated them -
//! by the end of the forwarding phase each one has either reached the base
//! or died with its holder.

use std::mem;

use crate::energy::{Battery, DrainOutcome, EnergyParams};
use crate::rng::SplitMix64;
use crate::strategies::{
    best_parent, diffusion_select, ideal_cluster_assign, ideal_diffusion_plan,
    random_cluster_elect, receive_check, ClusterAssignment, Destination, E3dNodeState,
    E3dThresholds, ExceptionMessage, StrategyKind,
};
use crate::topology::{NeighborEntry, Topology};
use crate::trace::{ControlPurpose, TraceEvent, TraceSink};

/// Iteration cap when the configuration does not set one.
pub const DEFAULT_MAX_ITERATIONS: u64 = 100_000;

// ====================================================================
// Configuration
// ====================================================================

/// Everything one run depends on besides the topology.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub strategy: StrategyKind,
    pub energy: EnergyParams,
    /// Table size cap for the diffusion strategies.
    pub max_neighbors: usize,
    /// Cluster count for the clustering strategies.
    pub clusters: usize,
    /// Iterations between random-clustering elections.
    pub round_length: u64,
    pub e3d: E3dThresholds,
    /// Hard stop; a value of zero is treated as one iteration.
    pub max_iterations: u64,
    /// Seed for the engine's own randomness (elections, k-means starts).
    pub seed: u64,
}

impl SimConfig {
    pub fn new(strategy: StrategyKind, seed: u64) -> Self {
        Self {
            strategy,
            energy: EnergyParams::default(),
            max_neighbors: 8,
            clusters: 5,
            round_length: 20,
            e3d: E3dThresholds::default(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.energy.validate().map_err(|e| e.to_string())?;
        self.e3d.validate()?;
        if self.max_neighbors == 0 {
            return Err("max_neighbors must be at least 1".into());
        }
        if self.clusters == 0 {
            return Err("clusters must be at least 1".into());
        }
        if self.round_length == 0 {
            return Err("round_length must be at least 1".into());
        }
        Ok(())
    }

    /// The cap actually applied: at least one iteration always runs.
    pub fn effective_max_iterations(&self) -> u64 {
        self.max_iterations.max(1)
    }
}

// ====================================================================
// Result
// ====================================================================

/// Everything measured over one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub strategy: StrategyKind,
    pub seed: u64,
    /// Iterations actually executed (final, possibly partial, included).
    pub iterations_run: u64,
    /// True when the iteration cap fired with nodes still alive.
    pub censored: bool,
    /// Iteration each node died in; `None` for survivors. Setup-phase
    /// deaths are recorded as iteration 0.
    pub death_iteration: Vec<Option<u64>>,
    /// Live-node count after setup and after every iteration that saw a
    /// death: `(iteration, alive)`, starting at iteration 0.
    pub alive_curve: Vec<(u64, usize)>,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Control messages successfully delivered (setup, ads, joins, acks,
    /// exceptions).
    pub sync_messages: u64,
    /// Energy each node paid out, total.
    pub charged: Vec<f64>,
    /// Energy stranded in each node's battery at death.
    pub stranded: Vec<f64>,
    /// Energy still in each battery at the end of the run.
    pub remaining: Vec<f64>,
}

impl SimulationResult {
    pub fn node_count(&self) -> usize {
        self.death_iteration.len()
    }

    pub fn alive_at_end(&self) -> usize {
        self.death_iteration.iter().filter(|d| d.is_none()).count()
    }
}

// ====================================================================
// Engine internals
// ====================================================================

#[derive(Debug, Clone)]
struct Packet {
    id: u64,
    origin: usize,
    /// Power fraction of the last sender, stamped at transmission.
    sender_pf: f64,
    hops: u32,
}

struct Engine<'a> {
    topo: &'a Topology,
    cfg: &'a SimConfig,
    sink: &'a mut dyn TraceSink,

    batteries: Vec<Battery>,
    alive: Vec<bool>,
    alive_count: usize,
    death_iteration: Vec<Option<u64>>,
    charged: Vec<f64>,
    stranded: Vec<f64>,
    queues: Vec<Vec<Packet>>,
    /// Data packets each node received this iteration.
    rx_count: Vec<u32>,
    /// Forwarding turn order: farthest from the base first.
    order: Vec<usize>,

    // Strategy state; only the fields for cfg.strategy are populated.
    bd_tables: Vec<Vec<NeighborEntry>>,
    e3d_states: Vec<E3dNodeState>,
    parents: Vec<Option<Destination>>,
    cluster: Option<ClusterAssignment>,
    /// Cluster members that lost their head and report direct to the base
    /// until the next (re)assignment.
    fallback: Vec<bool>,

    rng: SplitMix64,
    iteration: u64,
    next_packet: u64,
    generated: u64,
    delivered: u64,
    dropped: u64,
    sync_messages: u64,
    alive_curve: Vec<(u64, usize)>,
}

/// Run one simulation to completion, streaming every event into `sink`.
///
/// Panics if the configuration fails [`SimConfig::validate`].
pub fn run_simulation(
    topo: &Topology,
    cfg: &SimConfig,
    sink: &mut dyn TraceSink,
) -> SimulationResult {
    cfg.validate().expect("simulation config must be valid");
    let n = topo.node_count();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        topo.dist_to_base(b)
            .partial_cmp(&topo.dist_to_base(a))
            .expect("distances are finite")
            .then(a.cmp(&b))
    });

    let mut engine = Engine {
        topo,
        cfg,
        sink,
        batteries: vec![Battery::new(cfg.energy.initial_battery); n],
        alive: vec![true; n],
        alive_count: n,
        death_iteration: vec![None; n],
        charged: vec![0.0; n],
        stranded: vec![0.0; n],
        queues: vec![Vec::new(); n],
        rx_count: vec![0; n],
        order,
        bd_tables: Vec::new(),
        e3d_states: Vec::new(),
        parents: Vec::new(),
        cluster: None,
        fallback: vec![false; n],
        rng: SplitMix64::new(cfg.seed),
        iteration: 0,
        next_packet: 0,
        generated: 0,
        delivered: 0,
        dropped: 0,
        sync_messages: 0,
        alive_curve: Vec::new(),
    };
    engine.run()
}

/// How a send attempt left the sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SenderFate {
    Alive,
    Dead,
}

impl<'a> Engine<'a> {
    fn run(&mut self) -> SimulationResult {
        self.setup();
        self.alive_curve.push((0, self.alive_count));

        let max = self.cfg.effective_max_iterations();
        let mut it = 0;
        while it < max && self.alive_count > 0 {
            it += 1;
            self.iteration = it;
            self.run_iteration();
        }

        SimulationResult {
            strategy: self.cfg.strategy,
            seed: self.cfg.seed,
            iterations_run: it,
            censored: self.alive_count > 0,
            death_iteration: self.death_iteration.clone(),
            alive_curve: self.alive_curve.clone(),
            generated: self.generated,
            delivered: self.delivered,
            dropped: self.dropped,
            sync_messages: self.sync_messages,
            charged: self.charged.clone(),
            stranded: self.stranded.clone(),
            remaining: self.batteries.iter().map(|b| b.remaining()).collect(),
        }
    }

    // ----------------------------------------------------------------
    // Setup (iteration 0)
    // ----------------------------------------------------------------

    fn setup(&mut self) {
        let n = self.topo.node_count();
        match self.cfg.strategy {
            StrategyKind::Direct => {
                // The base announces itself once; every node pays one
                // control receive to learn it.
                for node in 0..n {
                    if !self.alive[node] {
                        continue;
                    }
                    self.control_rx(node, ControlPurpose::Setup);
                }
            }
            StrategyKind::BasicDiffusion | StrategyKind::E3d => {
                let tables: Vec<Vec<NeighborEntry>> = (0..n)
                    .map(|s| {
                        self.topo
                            .neighbor_table(s, self.cfg.max_neighbors)
                            .expect("node exists")
                    })
                    .collect();
                // Each table entry costs a two-way handshake: the owner
                // probes the neighbor, the neighbor confirms.
                for s in 0..n {
                    for e in &tables[s] {
                        self.control_message(s, e.neighbor, e.dist_to_me, ControlPurpose::Setup);
                        self.control_message(e.neighbor, s, e.dist_to_me, ControlPurpose::Setup);
                    }
                }
                if self.cfg.strategy == StrategyKind::E3d {
                    self.e3d_states = tables.into_iter().map(E3dNodeState::new).collect();
                } else {
                    self.bd_tables = tables;
                }
            }
            // Omniscient strategies get their knowledge for free, and
            // random clustering pays per election instead.
            StrategyKind::IdealDiffusion
            | StrategyKind::RandomClustering
            | StrategyKind::IdealClustering => {}
        }
    }

    // ----------------------------------------------------------------
    // Iteration phases
    // ----------------------------------------------------------------

    fn run_iteration(&mut self) {
        let it = self.iteration;
        let alive_at_start = self.alive_count;
        self.emit(TraceEvent::IterationStart { iteration: it });

        self.strategy_hook();

        // Generation: one packet per live node.
        for node in 0..self.topo.node_count() {
            if !self.alive[node] {
                continue;
            }
            let id = self.next_packet;
            self.next_packet += 1;
            self.generated += 1;
            self.emit(TraceEvent::PacketGenerated { packet: id, node });
            self.queues[node].push(Packet {
                id,
                origin: node,
                sender_pf: 1.0,
                hops: 0,
            });
        }

        // Forwarding: farthest node first.
        for i in 0..self.order.len() {
            let s = self.order[i];
            if !self.alive[s] {
                continue;
            }
            let queue = mem::take(&mut self.queues[s]);
            let mut pending = queue.into_iter();
            while let Some(p) = pending.next() {
                if self.forward_packet(s, p) == SenderFate::Dead {
                    for rest in pending.by_ref() {
                        self.drop_packet(rest, s);
                    }
                    break;
                }
            }
        }

        debug_assert!(
            self.queues.iter().all(Vec::is_empty),
            "no packet outlives its iteration"
        );
        if self.alive_count != alive_at_start {
            self.alive_curve.push((it, self.alive_count));
        }
        self.emit(TraceEvent::IterationEnd {
            iteration: it,
            alive: self.alive_count,
        });
        self.rx_count.fill(0);
    }

    fn strategy_hook(&mut self) {
        match self.cfg.strategy {
            StrategyKind::IdealDiffusion => {
                let pf = self.power_fractions();
                let tree = ideal_diffusion_plan(self.topo, &self.alive, &pf);
                self.parents = (0..self.topo.node_count()).map(|s| tree.parent(s)).collect();
            }
            StrategyKind::IdealClustering => {
                let alive_ids = self.alive_ids();
                let pf = self.power_fractions();
                self.cluster = Some(ideal_cluster_assign(
                    self.topo,
                    &alive_ids,
                    &pf,
                    self.cfg.clusters,
                    &mut self.rng,
                ));
                self.fallback.fill(false);
            }
            StrategyKind::RandomClustering => {
                if (self.iteration - 1) % self.cfg.round_length == 0 {
                    self.hold_election();
                }
            }
            _ => {}
        }
    }

    /// Random-clustering election: draw heads, then pay for the head
    /// advertisements and member join confirmations.
    fn hold_election(&mut self) {
        let alive_ids = self.alive_ids();
        let heads = random_cluster_elect(&alive_ids, self.cfg.clusters, &mut self.rng);
        let assignment = ClusterAssignment::from_heads(self.topo, &alive_ids, heads);
        self.fallback.fill(false);

        for &h in &assignment.heads().to_vec() {
            let members = assignment.members_of(h);
            if members.is_empty() || !self.alive[h] {
                continue;
            }
            // Advertisement: one broadcast sized to reach the farthest
            // member, received by each of them.
            let radius = members
                .iter()
                .map(|&m| self.topo.distance(h, m).expect("member exists"))
                .fold(0.0f64, f64::max);
            if self.control_tx(h, radius, ControlPurpose::ClusterAd) == SenderFate::Dead {
                continue;
            }
            for &m in &members {
                if self.alive[m] {
                    self.control_rx(m, ControlPurpose::ClusterAd);
                }
            }
            // Joins: each member confirms to the head individually. A
            // member keeps replying even if the head just died - it has no
            // way to know - and the message is simply lost.
            for &m in &members {
                if !self.alive[m] {
                    continue;
                }
                let d = self.topo.distance(h, m).expect("member exists");
                if self.control_tx(m, d, ControlPurpose::ClusterJoin) == SenderFate::Dead {
                    continue;
                }
                if self.alive[h] {
                    self.control_rx(h, ControlPurpose::ClusterJoin);
                }
            }
        }
        self.cluster = Some(assignment);
    }

    // ----------------------------------------------------------------
    // Forwarding
    // ----------------------------------------------------------------

    /// Move one packet out of `s`, retrying past dead targets until it is
    /// delivered, handed off, or dies with a node.
    fn forward_packet(&mut self, s: usize, mut p: Packet) -> SenderFate {
        loop {
            let dest = self.select_destination(s);
            let dist = match dest {
                Destination::Base => self.topo.dist_to_base(s),
                Destination::Node(r) => self.topo.distance(s, r).expect("target exists"),
            };
            let cost = self.cfg.energy.data_tx(dist);
            if let DrainOutcome::Died { stranded } = self.charge(s, cost) {
                self.kill(s, stranded, Some(p));
                return SenderFate::Dead;
            }
            let remaining = self.batteries[s].remaining();
            let pf_after = self.batteries[s].power_fraction();
            p.hops += 1;
            p.sender_pf = pf_after;
            self.emit(TraceEvent::DataTx {
                packet: p.id,
                from: s,
                to: dest,
                distance: dist,
                cost,
                remaining,
                pf_after,
            });
            let sender_dying = remaining == 0.0;

            let r = match dest {
                Destination::Base => {
                    self.delivered += 1;
                    self.emit(TraceEvent::PacketDelivered {
                        packet: p.id,
                        origin: p.origin,
                        hops: p.hops,
                    });
                    if sender_dying {
                        self.kill(s, 0.0, None);
                        return SenderFate::Dead;
                    }
                    return SenderFate::Alive;
                }
                Destination::Node(r) => r,
            };

            if !self.alive[r] {
                // Transmitted into the void; the charge stands.
                self.emit(TraceEvent::DeliveryFailed {
                    packet: p.id,
                    from: s,
                    to: r,
                });
                if sender_dying {
                    self.kill(s, 0.0, Some(p));
                    return SenderFate::Dead;
                }
                self.handle_delivery_failure(s, r);
                continue;
            }

            // Receiver pays for the receive.
            let rx_cost = self.cfg.energy.data_rx();
            if let DrainOutcome::Died { stranded } = self.charge(r, rx_cost) {
                self.kill(r, stranded, None);
                self.emit(TraceEvent::DeliveryFailed {
                    packet: p.id,
                    from: s,
                    to: r,
                });
                if sender_dying {
                    self.kill(s, 0.0, Some(p));
                    return SenderFate::Dead;
                }
                self.handle_delivery_failure(s, r);
                continue;
            }
            let r_remaining = self.batteries[r].remaining();
            self.rx_count[r] += 1;
            self.emit(TraceEvent::DataRx {
                packet: p.id,
                node: r,
                from: s,
                cost: rx_cost,
                remaining: r_remaining,
            });

            self.accept_packet(s, r, p, sender_dying, r_remaining);
            if sender_dying {
                self.kill(s, 0.0, None);
                return SenderFate::Dead;
            }
            return SenderFate::Alive;
        }
    }

    /// The packet is `r`'s now; run the receiver's side of the exchange.
    fn accept_packet(
        &mut self,
        s: usize,
        r: usize,
        p: Packet,
        sender_dying: bool,
        r_remaining: f64,
    ) {
        let sender_pf = p.sender_pf;
        if self.cfg.strategy.is_clustering() {
            // Heads relay straight to the base instead of queueing.
            if r_remaining == 0.0 {
                self.kill(r, 0.0, Some(p));
                return;
            }
            self.relay_to_base(r, p);
            return;
        }

        // Relays queue the packet for their own turn.
        self.queues[r].push(p);
        if r_remaining == 0.0 {
            self.kill(r, 0.0, None);
            return;
        }
        if self.cfg.strategy == StrategyKind::E3d && !sender_dying {
            self.e3d_reactions(s, r, sender_pf);
        }
    }

    /// A cluster head immediately forwards a received packet to the base.
    fn relay_to_base(&mut self, r: usize, mut p: Packet) {
        let dist = self.topo.dist_to_base(r);
        let cost = self.cfg.energy.data_tx(dist);
        if let DrainOutcome::Died { stranded } = self.charge(r, cost) {
            self.kill(r, stranded, Some(p));
            return;
        }
        let remaining = self.batteries[r].remaining();
        let pf_after = self.batteries[r].power_fraction();
        p.hops += 1;
        self.emit(TraceEvent::DataTx {
            packet: p.id,
            from: r,
            to: Destination::Base,
            distance: dist,
            cost,
            remaining,
            pf_after,
        });
        self.delivered += 1;
        self.emit(TraceEvent::PacketDelivered {
            packet: p.id,
            origin: p.origin,
            hops: p.hops,
        });
        if remaining == 0.0 {
            self.kill(r, 0.0, None);
        }
    }

    /// Receiver-side checks and replies after an e3D relay accepted a
    /// packet: one exception if anything objects, else the acknowledgement
    /// the sender may be waiting for.
    fn e3d_reactions(&mut self, s: usize, r: usize, sender_pf: f64) {
        let receiver_pf = self.batteries[r].power_fraction();
        let queue_depth = self.rx_count[r];
        let reason = receive_check(receiver_pf, sender_pf, queue_depth, &self.cfg.e3d);

        if let Some(reason) = reason {
            self.emit(TraceEvent::Exception {
                from: r,
                to: s,
                reason,
                receiver_pf,
                sender_pf,
                queue_depth,
            });
            let d = self.topo.distance(r, s).expect("sender exists");
            let fate = self.control_tx(r, d, ControlPurpose::Exception);
            if fate == SenderFate::Dead {
                return;
            }
            let r_dying = self.batteries[r].remaining() == 0.0;
            // The exception replaces any acknowledgement the sender was
            // waiting for; rerouting applies only if the sender actually
            // received the message.
            if self.control_rx(s, ControlPurpose::Exception) == SenderFate::Alive {
                let msg = ExceptionMessage {
                    from: r,
                    to: s,
                    reason,
                };
                self.e3d_states[s].handle_exception(s, &msg);
            }
            if r_dying && self.alive[r] {
                self.kill(r, 0.0, None);
            }
            return;
        }

        if self.e3d_states[s].ack_pending() {
            let d = self.topo.distance(r, s).expect("sender exists");
            if self.control_tx(r, d, ControlPurpose::Ack) == SenderFate::Dead {
                return;
            }
            let r_dying = self.batteries[r].remaining() == 0.0;
            if self.control_rx(s, ControlPurpose::Ack) == SenderFate::Alive {
                self.e3d_states[s].clear_ack();
            }
            if r_dying && self.alive[r] {
                self.kill(r, 0.0, None);
            }
        }
    }

    // ----------------------------------------------------------------
    // Routing decisions
    // ----------------------------------------------------------------

    fn select_destination(&self, s: usize) -> Destination {
        match self.cfg.strategy {
            StrategyKind::Direct => Destination::Base,
            StrategyKind::BasicDiffusion => diffusion_select(&self.bd_tables[s], &self.alive),
            StrategyKind::E3d => self.e3d_states[s].next_hop(),
            StrategyKind::IdealDiffusion => {
                self.parents[s].expect("live node has a planned parent")
            }
            StrategyKind::RandomClustering | StrategyKind::IdealClustering => {
                if self.fallback[s] {
                    return Destination::Base;
                }
                match self.cluster.as_ref().and_then(|c| c.head_of(s)) {
                    Some(h) if h != s => Destination::Node(h),
                    _ => Destination::Base,
                }
            }
        }
    }

    /// The sender just learned `r` is gone; adjust its routing state.
    fn handle_delivery_failure(&mut self, s: usize, r: usize) {
        match self.cfg.strategy {
            // Direct targets only the base, which cannot die.
            StrategyKind::Direct => unreachable!("base never fails"),
            // Selection already skips dead entries next time around.
            StrategyKind::BasicDiffusion => {}
            StrategyKind::E3d => self.e3d_states[s].mark_unreachable(r),
            StrategyKind::IdealDiffusion => {
                let pf = self.power_fractions();
                self.parents[s] = Some(best_parent(self.topo, &self.alive, &pf, s));
            }
            StrategyKind::RandomClustering | StrategyKind::IdealClustering => {
                self.fallback[s] = true;
            }
        }
    }

    // ----------------------------------------------------------------
    // Charging, control traffic, death
    // ----------------------------------------------------------------

    fn charge(&mut self, node: usize, cost: f64) -> DrainOutcome {
        debug_assert!(self.alive[node], "only live nodes act");
        let outcome = self.batteries[node].drain(cost);
        if outcome == DrainOutcome::Ok {
            self.charged[node] += cost;
        }
        outcome
    }

    /// One control transmission by `node` over `dist`. On death the node
    /// is killed in place; on exact exhaustion the transmission still
    /// counts and the caller decides when to kill.
    fn control_tx(&mut self, node: usize, dist: f64, purpose: ControlPurpose) -> SenderFate {
        let cost = self.cfg.energy.control_tx(dist);
        if let DrainOutcome::Died { stranded } = self.charge(node, cost) {
            self.kill(node, stranded, None);
            return SenderFate::Dead;
        }
        self.emit(TraceEvent::ControlTx {
            node,
            purpose,
            distance: dist,
            cost,
            remaining: self.batteries[node].remaining(),
        });
        SenderFate::Alive
    }

    /// One control receipt by `node`. Completed receipts count as a
    /// delivered control message; exact exhaustion completes the receipt
    /// and then kills the node.
    fn control_rx(&mut self, node: usize, purpose: ControlPurpose) -> SenderFate {
        let cost = self.cfg.energy.control_rx();
        if let DrainOutcome::Died { stranded } = self.charge(node, cost) {
            self.kill(node, stranded, None);
            return SenderFate::Dead;
        }
        let remaining = self.batteries[node].remaining();
        self.emit(TraceEvent::ControlRx {
            node,
            purpose,
            cost,
            remaining,
        });
        self.sync_messages += 1;
        if remaining == 0.0 {
            self.kill(node, 0.0, None);
            return SenderFate::Dead;
        }
        SenderFate::Alive
    }

    /// Two-way setup handshake leg: `a` transmits to `b` over `dist`.
    fn control_message(&mut self, a: usize, b: usize, dist: f64, purpose: ControlPurpose) {
        if !self.alive[a] {
            return;
        }
        if self.control_tx(a, dist, purpose) == SenderFate::Dead {
            return;
        }
        let a_dying = self.batteries[a].remaining() == 0.0;
        if self.alive[b] {
            self.control_rx(b, purpose);
        }
        if a_dying && self.alive[a] {
            self.kill(a, 0.0, None);
        }
    }

    fn kill(&mut self, node: usize, stranded: f64, held: Option<Packet>) {
        debug_assert!(self.alive[node]);
        self.alive[node] = false;
        self.alive_count -= 1;
        self.death_iteration[node] = Some(self.iteration);
        self.stranded[node] = stranded;
        self.emit(TraceEvent::NodeDied {
            node,
            iteration: self.iteration,
            stranded,
        });
        let queue = mem::take(&mut self.queues[node]);
        for p in queue {
            self.drop_packet(p, node);
        }
        if let Some(p) = held {
            self.drop_packet(p, node);
        }
    }

    fn drop_packet(&mut self, p: Packet, holder: usize) {
        self.dropped += 1;
        self.emit(TraceEvent::PacketDropped {
            packet: p.id,
            origin: p.origin,
            holder,
        });
    }

    // ----------------------------------------------------------------
    // Small helpers
    // ----------------------------------------------------------------

    fn emit(&mut self, event: TraceEvent) {
        self.sink.record(&event);
    }

    fn power_fractions(&self) -> Vec<f64> {
        self.batteries.iter().map(|b| b.power_fraction()).collect()
    }

    fn alive_ids(&self) -> Vec<usize> {
        (0..self.topo.node_count())
            .filter(|&i| self.alive[i])
            .collect()
    }
}

// ====================================================================
// Tests
// ====================================================================
