//! Trace replay: an independent audit of a finished run.
//!
//! The checker consumes the same event stream the engine emits and
//! rebuilds the whole simulation from scratch - batteries, packet
//! custody, cluster-free routing state, the receiver-side exception rules
//! - validating each event against its own books as it goes. It shares
//! only the primitive cost formulas and threshold checks with the engine;
//! all sequencing, accounting, and custody logic is reconstructed here, so
//! double-entry disagreements surface as violations instead of passing
//! silently.
//!
//! Checked invariants:
//!
//! - every charge matches the recomputed cost and the mirrored battery,
//!   and nobody acts after death or overdraws;
//! - packets form loop-free custody chains and are all accounted for -
//!   delivered or dropped, never carried across iterations;
//! - delivery failures happen only against dead targets, and a sender
//!   never transmits to a peer it has blacklisted or seen fail;
//! - e3D exceptions are emitted exactly when the receiver checks say so,
//!   with the exact snapshot values, and acknowledgements flow exactly on
//!   the first packet to a new neighbor;
//! - final tallies (deaths, counters, energy books) match the reported
//!   result to within 1e-9 joules.

use std::collections::{BTreeSet, HashMap};

use crate::engine::{SimConfig, SimulationResult};
use crate::strategies::{receive_check, Destination, E3dNodeState, ExceptionMessage, StrategyKind};
use crate::topology::Topology;
use crate::trace::{ControlPurpose, TraceEvent, TraceSink};

const ENERGY_TOLERANCE: f64 = 1e-9;
const MAX_RECORDED_VIOLATIONS: usize = 100;

/// Custody state of one live packet.
#[derive(Debug)]
enum PacketState {
    Held { holder: usize },
    InFlight { from: usize, to: Destination },
}

#[derive(Debug)]
struct PacketBook {
    state: PacketState,
    path: Vec<usize>,
    transmissions: u32,
    /// Power fraction the last transmitter stamped into the packet.
    sender_pf: f64,
}

/// Reply the trace owes us next, per the e3D receiver rules.
#[derive(Debug, Clone, PartialEq)]
enum Pending {
    /// The receiver must announce this exception now.
    ExceptionAnnounce {
        receiver: usize,
        sender: usize,
        reason: crate::strategies::ExceptionReason,
        receiver_pf: f64,
        sender_pf: f64,
        queue_depth: u32,
    },
    /// Announced; the receiver must transmit it (or die trying).
    ExceptionTx { receiver: usize, sender: usize },
    /// Transmitted; the sender must receive it (or die trying).
    ExceptionRx { receiver: usize, sender: usize },
    /// The receiver owes the sender a first-packet acknowledgement.
    AckTx { receiver: usize, sender: usize },
    AckRx { receiver: usize, sender: usize },
}

/// A [`TraceSink`] that audits the stream and then the final result.
pub struct ReplayChecker<'a> {
    topo: &'a Topology,
    cfg: &'a SimConfig,

    remaining: Vec<f64>,
    charged: Vec<f64>,
    stranded: Vec<f64>,
    dead: Vec<bool>,
    death_iteration: Vec<Option<u64>>,
    alive_count: usize,
    alive_curve: Vec<(u64, usize)>,

    packets: HashMap<u64, PacketBook>,
    rx_count: Vec<u32>,
    /// Pairs (sender, target) that must never see another data packet.
    blacklist: BTreeSet<(usize, usize)>,
    /// Mirrored e3D routing state, rebuilt from the same tables.
    e3d_states: Vec<E3dNodeState>,
    pending: Option<Pending>,

    iteration: u64,
    in_iteration: bool,
    iterations_seen: u64,
    generated: u64,
    delivered: u64,
    dropped: u64,
    sync_messages: u64,

    violations: Vec<String>,
    suppressed: u64,
    /// Exception announcements seen; lets callers confirm a run actually
    /// exercised the exception path.
    pub exceptions_seen: u64,
}

impl<'a> ReplayChecker<'a> {
    pub fn new(topo: &'a Topology, cfg: &'a SimConfig) -> Self {
        let n = topo.node_count();
        let e3d_states = if cfg.strategy == StrategyKind::E3d {
            (0..n)
                .map(|s| {
                    E3dNodeState::new(
                        topo.neighbor_table(s, cfg.max_neighbors).expect("node exists"),
                    )
                })
                .collect()
        } else {
            Vec::new()
        };
        Self {
            topo,
            cfg,
            remaining: vec![cfg.energy.initial_battery; n],
            charged: vec![0.0; n],
            stranded: vec![0.0; n],
            dead: vec![false; n],
            death_iteration: vec![None; n],
            alive_count: n,
            alive_curve: Vec::new(),
            packets: HashMap::new(),
            rx_count: vec![0; n],
            blacklist: BTreeSet::new(),
            e3d_states,
            pending: None,
            iteration: 0,
            in_iteration: false,
            iterations_seen: 0,
            generated: 0,
            delivered: 0,
            dropped: 0,
            sync_messages: 0,
            violations: Vec::new(),
            suppressed: 0,
            exceptions_seen: 0,
        }
    }

    fn violation(&mut self, message: String) {
        if self.violations.len() < MAX_RECORDED_VIOLATIONS {
            self.violations
                .push(format!("it {}: {message}", self.iteration));
        } else {
            self.suppressed += 1;
        }
    }

    fn power_fraction(&self, node: usize) -> f64 {
        self.remaining[node] / self.cfg.energy.initial_battery
    }

    /// Mirror one paid action and reconcile against the reported level.
    fn apply_charge(&mut self, node: usize, cost: f64, reported_remaining: f64, what: &str) {
        if self.dead[node] {
            self.violation(format!("dead node {node} paid for {what}"));
            return;
        }
        self.remaining[node] -= cost;
        self.charged[node] += cost;
        if self.remaining[node] < -ENERGY_TOLERANCE {
            self.violation(format!("node {node} overdrew its battery on {what}"));
        }
        if (self.remaining[node] - reported_remaining).abs() > ENERGY_TOLERANCE {
            self.violation(format!(
                "node {node} {what}: reported remaining {reported_remaining} but books say {}",
                self.remaining[node]
            ));
        }
    }

    /// Enforce the expected-reaction state machine before bookkeeping.
    fn check_pending(&mut self, event: &TraceEvent) {
        let Some(pending) = self.pending.clone() else {
            // With nothing owed, no reaction traffic is legitimate.
            match event {
                TraceEvent::Exception { from, to, .. } => {
                    self.violation(format!("unexpected exception from {from} to {to}"));
                }
                TraceEvent::ControlTx { node, purpose, .. }
                | TraceEvent::ControlRx { node, purpose, .. }
                    if matches!(purpose, ControlPurpose::Ack | ControlPurpose::Exception) =>
                {
                    self.violation(format!(
                        "unexpected {} control traffic at node {node}",
                        purpose.name()
                    ));
                }
                _ => {}
            }
            return;
        };

        match pending {
            Pending::ExceptionAnnounce {
                receiver,
                sender,
                reason,
                receiver_pf,
                sender_pf,
                queue_depth,
            } => {
                if let TraceEvent::Exception {
                    from,
                    to,
                    reason: seen_reason,
                    receiver_pf: seen_rpf,
                    sender_pf: seen_spf,
                    queue_depth: seen_depth,
                } = *event
                {
                    if from != receiver || to != sender || seen_reason != reason {
                        self.violation(format!(
                            "exception from {from} to {to} ({}) but books expected {receiver} to {sender} ({})",
                            seen_reason.name(),
                            reason.name()
                        ));
                    }
                    if (seen_rpf - receiver_pf).abs() > ENERGY_TOLERANCE
                        || (seen_spf - sender_pf).abs() > ENERGY_TOLERANCE
                        || seen_depth != queue_depth
                    {
                        self.violation(format!(
                            "exception snapshot mismatch: saw ({seen_rpf}, {seen_spf}, {seen_depth}), expected ({receiver_pf}, {sender_pf}, {queue_depth})"
                        ));
                    }
                    self.pending = Some(Pending::ExceptionTx { receiver, sender });
                } else {
                    self.violation(format!(
                        "receiver {receiver} owed sender {sender} a {} exception but the trace moved on",
                        reason.name()
                    ));
                    self.pending = None;
                }
            }
            Pending::ExceptionTx { receiver, sender } => match *event {
                TraceEvent::ControlTx {
                    node,
                    purpose: ControlPurpose::Exception,
                    ..
                } if node == receiver => {
                    self.pending = Some(Pending::ExceptionRx { receiver, sender });
                }
                TraceEvent::NodeDied { node, .. } if node == receiver => {
                    self.pending = None;
                }
                _ => {
                    self.violation(format!(
                        "expected node {receiver} to transmit its exception (or die), got {event}"
                    ));
                    self.pending = None;
                }
            },
            Pending::ExceptionRx { receiver, sender } => match *event {
                TraceEvent::ControlRx {
                    node,
                    purpose: ControlPurpose::Exception,
                    ..
                } if node == sender => {
                    // The reroute takes effect only on a completed receipt.
                    self.blacklist.insert((sender, receiver));
                    let msg = ExceptionMessage {
                        from: receiver,
                        to: sender,
                        // The concrete reason does not affect rerouting.
                        reason: crate::strategies::ExceptionReason::PowerImbalance,
                    };
                    self.e3d_states[sender].handle_exception(sender, &msg);
                    self.pending = None;
                }
                TraceEvent::NodeDied { node, .. } if node == sender => {
                    self.pending = None;
                }
                _ => {
                    self.violation(format!(
                        "expected sender {sender} to receive the exception (or die), got {event}"
                    ));
                    self.pending = None;
                }
            },
            Pending::AckTx { receiver, sender } => match *event {
                TraceEvent::ControlTx {
                    node,
                    purpose: ControlPurpose::Ack,
                    ..
                } if node == receiver => {
                    self.pending = Some(Pending::AckRx { receiver, sender });
                }
                TraceEvent::NodeDied { node, .. } if node == receiver => {
                    self.pending = None;
                }
                _ => {
                    self.violation(format!(
                        "expected node {receiver} to acknowledge (or die), got {event}"
                    ));
                    self.pending = None;
                }
            },
            Pending::AckRx { receiver, sender } => match *event {
                TraceEvent::ControlRx {
                    node,
                    purpose: ControlPurpose::Ack,
                    ..
                } if node == sender => {
                    self.e3d_states[sender].clear_ack();
                    self.pending = None;
                }
                TraceEvent::NodeDied { node, .. } if node == sender => {
                    self.pending = None;
                }
                _ => {
                    self.violation(format!(
                        "expected sender {sender} to receive the ack (or die), got {event} from receiver {receiver}"
                    ));
                    self.pending = None;
                }
            },
        }
    }

    fn on_data_tx(
        &mut self,
        packet: u64,
        from: usize,
        to: Destination,
        distance: f64,
        cost: f64,
        remaining: f64,
        pf_after: f64,
    ) {
        let expected_distance = match to {
            Destination::Base => self.topo.dist_to_base(from),
            Destination::Node(r) => self.topo.distance(from, r).expect("target exists"),
        };
        if distance != expected_distance {
            self.violation(format!(
                "packet {packet}: distance {distance} from {from} to {to}, measured {expected_distance}"
            ));
        }
        if cost != self.cfg.energy.data_tx(distance) {
            self.violation(format!("packet {packet}: data tx cost {cost} off book"));
        }
        if let Destination::Node(r) = to {
            if self.blacklist.contains(&(from, r)) {
                self.violation(format!(
                    "node {from} transmitted to {r} after blacklisting it"
                ));
            }
            if self.cfg.strategy == StrategyKind::E3d
                && self.e3d_states[from].next_hop() != to
            {
                self.violation(format!(
                    "node {from} sent to {to}, routing state says {}",
                    self.e3d_states[from].next_hop()
                ));
            }
        }
        self.apply_charge(from, cost, remaining, "data tx");
        let expected_pf = self.power_fraction(from);
        if (pf_after - expected_pf).abs() > ENERGY_TOLERANCE {
            self.violation(format!(
                "packet {packet}: stamped pf {pf_after}, books say {expected_pf}"
            ));
        }

        let mut problem = None;
        match self.packets.get_mut(&packet) {
            None => problem = Some(format!("transmission of unknown packet {packet}")),
            Some(book) => {
                if !matches!(book.state, PacketState::Held { holder } if holder == from) {
                    problem = Some(format!(
                        "packet {packet} transmitted by {from} without custody"
                    ));
                }
                book.state = PacketState::InFlight { from, to };
                book.transmissions += 1;
                book.sender_pf = pf_after;
            }
        }
        if let Some(message) = problem {
            self.violation(message);
        }
    }

    fn on_data_rx(&mut self, packet: u64, node: usize, from: usize, cost: f64, remaining: f64) {
        if cost != self.cfg.energy.data_rx() {
            self.violation(format!("packet {packet}: data rx cost {cost} off book"));
        }
        self.apply_charge(node, cost, remaining, "data rx");
        self.rx_count[node] += 1;

        let mut problems = Vec::new();
        let mut sender_stamp = None;
        match self.packets.get_mut(&packet) {
            None => problems.push(format!("receipt of unknown packet {packet}")),
            Some(book) => {
                if !matches!(
                    book.state,
                    PacketState::InFlight { from: f, to: Destination::Node(t) }
                        if f == from && t == node
                ) {
                    problems.push(format!(
                        "packet {packet} received by {node} but was not in flight to it"
                    ));
                }
                if book.path.contains(&node) {
                    problems.push(format!(
                        "packet {packet} looped back to node {node} (path {:?})",
                        book.path
                    ));
                }
                book.path.push(node);
                book.state = PacketState::Held { holder: node };
                sender_stamp = Some(book.sender_pf);
            }
        }
        for message in problems {
            self.violation(message);
        }
        // Relay chains must make strict progress toward the base; only
        // cluster heads may sit farther out than their members.
        if !self.cfg.strategy.is_clustering()
            && self.topo.dist_to_base(node) >= self.topo.dist_to_base(from)
        {
            self.violation(format!(
                "packet {packet} moved away from the base ({from} -> {node})"
            ));
        }

        // Decide what reply, if any, this receipt now owes.
        if self.cfg.strategy == StrategyKind::E3d {
            let receiver_alive = self.remaining[node] > 0.0;
            let sender_alive = !self.dead[from] && self.remaining[from] > 0.0;
            if receiver_alive && sender_alive {
                let receiver_pf = self.power_fraction(node);
                let sender_pf = sender_stamp.unwrap_or(1.0);
                let queue_depth = self.rx_count[node];
                if let Some(reason) =
                    receive_check(receiver_pf, sender_pf, queue_depth, &self.cfg.e3d)
                {
                    self.pending = Some(Pending::ExceptionAnnounce {
                        receiver: node,
                        sender: from,
                        reason,
                        receiver_pf,
                        sender_pf,
                        queue_depth,
                    });
                } else if self.e3d_states[from].ack_pending() {
                    self.pending = Some(Pending::AckTx {
                        receiver: node,
                        sender: from,
                    });
                }
            }
        }
    }

    fn on_delivery_failed(&mut self, packet: u64, from: usize, to: usize) {
        if !self.dead[to] {
            self.violation(format!(
                "delivery of packet {packet} to {to} failed while {to} is alive"
            ));
        }
        self.blacklist.insert((from, to));
        if self.cfg.strategy == StrategyKind::E3d {
            self.e3d_states[from].mark_unreachable(to);
        }
        let mut problem = None;
        match self.packets.get_mut(&packet) {
            None => problem = Some(format!("failure of unknown packet {packet}")),
            Some(book) => {
                if !matches!(
                    book.state,
                    PacketState::InFlight { from: f, to: Destination::Node(t) }
                        if f == from && t == to
                ) {
                    problem = Some(format!(
                        "packet {packet}: failure reported for a transmission not in flight"
                    ));
                }
                // Custody returns to the sender for the retry.
                book.state = PacketState::Held { holder: from };
            }
        }
        if let Some(message) = problem {
            self.violation(message);
        }
    }

    fn on_node_died(&mut self, node: usize, iteration: u64, stranded: f64) {
        if self.dead[node] {
            self.violation(format!("node {node} died twice"));
            return;
        }
        if iteration != self.iteration {
            self.violation(format!(
                "death of {node} stamped iteration {iteration}, stream is at {}",
                self.iteration
            ));
        }
        if (self.remaining[node] - stranded).abs() > ENERGY_TOLERANCE {
            self.violation(format!(
                "node {node} died stranding {stranded}, books say {}",
                self.remaining[node]
            ));
        }
        self.dead[node] = true;
        self.alive_count -= 1;
        self.death_iteration[node] = Some(iteration);
        self.stranded[node] = stranded;
    }
}

impl<'a> TraceSink for ReplayChecker<'a> {
    fn record(&mut self, event: &TraceEvent) {
        self.check_pending(event);

        match *event {
            TraceEvent::IterationStart { iteration } => {
                if !self.in_iteration && self.iterations_seen == 0 {
                    // Setup is over; freeze the curve's starting point.
                    self.alive_curve.push((0, self.alive_count));
                }
                if iteration != self.iterations_seen + 1 {
                    self.violation(format!("iteration {iteration} out of order"));
                }
                self.iteration = iteration;
                self.in_iteration = true;
                self.rx_count.fill(0);
            }
            TraceEvent::IterationEnd { iteration, alive } => {
                if !self.in_iteration || iteration != self.iteration {
                    self.violation(format!("iteration {iteration} ended out of order"));
                }
                self.in_iteration = false;
                self.iterations_seen = iteration;
                if alive != self.alive_count {
                    self.violation(format!(
                        "iteration {iteration} reports {alive} alive, books say {}",
                        self.alive_count
                    ));
                }
                if let Some(p) = self.packets.keys().next().copied() {
                    self.violation(format!(
                        "packet {p} survived iteration {iteration} unresolved"
                    ));
                }
                match self.alive_curve.last() {
                    Some(&(_, last_alive)) if last_alive != self.alive_count => {
                        self.alive_curve.push((iteration, self.alive_count));
                    }
                    _ => {}
                }
            }
            TraceEvent::PacketGenerated { packet, node } => {
                if self.dead[node] {
                    self.violation(format!("dead node {node} generated packet {packet}"));
                }
                self.generated += 1;
                let prior = self.packets.insert(
                    packet,
                    PacketBook {
                        state: PacketState::Held { holder: node },
                        path: vec![node],
                        transmissions: 0,
                        sender_pf: 1.0,
                    },
                );
                if prior.is_some() {
                    self.violation(format!("packet id {packet} reused"));
                }
            }
            TraceEvent::DataTx {
                packet,
                from,
                to,
                distance,
                cost,
                remaining,
                pf_after,
            } => self.on_data_tx(packet, from, to, distance, cost, remaining, pf_after),
            TraceEvent::DataRx {
                packet,
                node,
                from,
                cost,
                remaining,
            } => self.on_data_rx(packet, node, from, cost, remaining),
            TraceEvent::DeliveryFailed { packet, from, to } => {
                self.on_delivery_failed(packet, from, to)
            }
            TraceEvent::ControlTx {
                node,
                purpose,
                distance,
                cost,
                remaining,
            } => {
                if cost != self.cfg.energy.control_tx(distance) {
                    self.violation(format!(
                        "{} control tx cost {cost} off book at node {node}",
                        purpose.name()
                    ));
                }
                self.apply_charge(node, cost, remaining, "control tx");
            }
            TraceEvent::ControlRx {
                node,
                purpose: _,
                cost,
                remaining,
            } => {
                if cost != self.cfg.energy.control_rx() {
                    self.violation(format!("control rx cost {cost} off book at node {node}"));
                }
                self.apply_charge(node, cost, remaining, "control rx");
                self.sync_messages += 1;
            }
            TraceEvent::Exception { .. } => {
                // Fully validated by the pending-reaction machine.
                self.exceptions_seen += 1;
            }
            TraceEvent::PacketDelivered {
                packet,
                origin,
                hops,
            } => {
                self.delivered += 1;
                match self.packets.remove(&packet) {
                    None => self.violation(format!("delivery of unknown packet {packet}")),
                    Some(book) => {
                        if !matches!(book.state, PacketState::InFlight { to: Destination::Base, .. })
                        {
                            self.violation(format!(
                                "packet {packet} delivered without a transmission to the base"
                            ));
                        }
                        if book.path.first() != Some(&origin) {
                            self.violation(format!(
                                "packet {packet} delivered with origin {origin}, born at {:?}",
                                book.path.first()
                            ));
                        }
                        if book.transmissions != hops {
                            self.violation(format!(
                                "packet {packet} delivered after {} transmissions, reported {hops}",
                                book.transmissions
                            ));
                        }
                    }
                }
            }
            TraceEvent::PacketDropped {
                packet,
                origin,
                holder,
            } => {
                self.dropped += 1;
                match self.packets.remove(&packet) {
                    None => self.violation(format!("drop of unknown packet {packet}")),
                    Some(book) => {
                        if !matches!(book.state, PacketState::Held { holder: h } if h == holder) {
                            self.violation(format!(
                                "packet {packet} dropped by {holder} without custody"
                            ));
                        }
                        if book.path.first() != Some(&origin) {
                            self.violation(format!(
                                "packet {packet} dropped with wrong origin {origin}"
                            ));
                        }
                        if !self.dead[holder] {
                            self.violation(format!(
                                "live node {holder} dropped packet {packet}"
                            ));
                        }
                    }
                }
            }
            TraceEvent::NodeDied {
                node,
                iteration,
                stranded,
            } => self.on_node_died(node, iteration, stranded),
        }
    }
}

impl<'a> ReplayChecker<'a> {
    /// Reconcile the stream against the reported result; returns every
    /// violation found (empty means the run passed its audit).
    pub fn finish(mut self, result: &SimulationResult) -> Vec<String> {
        if self.pending.is_some() {
            self.violation("stream ended with a reply still owed".into());
        }
        if self.alive_curve.is_empty() {
            // No iteration ever started; the curve is just the setup point.
            self.alive_curve.push((0, self.alive_count));
        }
        if result.iterations_run != self.iterations_seen {
            self.violation(format!(
                "result says {} iterations, stream showed {}",
                result.iterations_run, self.iterations_seen
            ));
        }
        if result.censored != (self.alive_count > 0) {
            self.violation("censoring flag disagrees with the survivor count".into());
        }
        if result.generated != self.generated
            || result.delivered != self.delivered
            || result.dropped != self.dropped
        {
            self.violation(format!(
                "packet counters (gen/del/drop) {}/{}/{} vs stream {}/{}/{}",
                result.generated,
                result.delivered,
                result.dropped,
                self.generated,
                self.delivered,
                self.dropped
            ));
        }
        if result.generated != result.delivered + result.dropped {
            self.violation("packets leaked: generated != delivered + dropped".into());
        }
        if result.sync_messages != self.sync_messages {
            self.violation(format!(
                "sync messages {} vs stream {}",
                result.sync_messages, self.sync_messages
            ));
        }
        if result.death_iteration != self.death_iteration {
            self.violation("death record disagrees with the stream".into());
        }
        if result.alive_curve != self.alive_curve {
            self.violation(format!(
                "alive curve {:?} vs stream {:?}",
                result.alive_curve, self.alive_curve
            ));
        }
        for node in 0..self.topo.node_count() {
            let reported_remaining = result.remaining[node];
            let book_remaining = if self.dead[node] { 0.0 } else { self.remaining[node] };
            if (result.charged[node] - self.charged[node]).abs() > ENERGY_TOLERANCE
                || (result.stranded[node] - self.stranded[node]).abs() > ENERGY_TOLERANCE
                || (reported_remaining - book_remaining).abs() > ENERGY_TOLERANCE
            {
                self.violation(format!("node {node}: energy books disagree with result"));
            }
            let total = result.charged[node] + result.stranded[node] + result.remaining[node];
            if (total - self.cfg.energy.initial_battery).abs() > ENERGY_TOLERANCE {
                self.violation(format!(
                    "node {node}: ledger open by {}",
                    total - self.cfg.energy.initial_battery
                ));
            }
        }
        if self.suppressed > 0 {
            let suppressed = self.suppressed;
            self.violation(format!("...and {suppressed} further violations suppressed"));
        }
        self.violations
    }
}
