//! e3D routing state: ranked neighbors, a permanent blacklist grown from
//! exception messages and delivery failures, and the acknowledgement flag
//! armed whenever the chosen neighbor changes.
//!
//! Receivers police their own load. On every received data packet the
//! receiver evaluates, in fixed priority order:
//!
//! 1. queue full - more packets funneled through it this iteration than the
//!    queue limit allows;
//! 2. near death - its own power fraction fell under the near-death floor;
//! 3. power imbalance - its power fraction is below the comparison threshold
//!    and strictly below the sender's.
//!
//! A triggered check sends one exception message back to the sender, who
//! permanently stops using that neighbor. Senders with no usable neighbors
//! left transmit straight to the base.

use std::collections::BTreeSet;

use crate::topology::NeighborEntry;

use super::Destination;

/// Thresholds governing the three receiver-side checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct E3dThresholds {
    /// Power fraction under which a receiver refuses all relay work.
    pub low_power: f64,
    /// Power fraction under which a receiver compares itself to senders.
    pub power_compare: f64,
    /// Packets relayed through a node in one iteration before it objects.
    pub queue_limit: u32,
}

impl Default for E3dThresholds {
    fn default() -> Self {
        Self {
            low_power: 0.10,
            power_compare: 0.50,
            queue_limit: 10,
        }
    }
}

impl E3dThresholds {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.low_power > 0.0 && self.low_power.is_finite()) {
            return Err(format!("low_power must be positive, got {}", self.low_power));
        }
        if !(self.power_compare > self.low_power) {
            return Err(format!(
                "power_compare ({}) must exceed low_power ({})",
                self.power_compare, self.low_power
            ));
        }
        if !(self.power_compare <= 1.0) {
            return Err(format!(
                "power_compare must be at most 1.0, got {}",
                self.power_compare
            ));
        }
        Ok(())
    }
}

/// Why a receiver told a sender to back off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExceptionReason {
    QueueFull,
    NearDeath,
    PowerImbalance,
}

impl ExceptionReason {
    pub fn name(self) -> &'static str {
        match self {
            ExceptionReason::QueueFull => "queue_full",
            ExceptionReason::NearDeath => "near_death",
            ExceptionReason::PowerImbalance => "power_imbalance",
        }
    }
}

/// Exception message, always sent from the receiver of a data packet back to
/// its sender.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExceptionMessage {
    /// Receiver that raised the exception.
    pub from: usize,
    /// Sender being told to reroute.
    pub to: usize,
    pub reason: ExceptionReason,
}

/// Evaluate the receiver-side checks for one received data packet.
///
/// `queue_depth` counts data packets funneled through the receiver this
/// iteration, including the one being processed. Both power fractions are
/// read at the moment of receipt: the receiver's after paying for the
/// receive, the sender's as stamped into the packet when it was sent. All
/// comparisons are strict, so sitting exactly at a threshold never fires.
pub fn receive_check(
    receiver_pf: f64,
    sender_pf: f64,
    queue_depth: u32,
    thresholds: &E3dThresholds,
) -> Option<ExceptionReason> {
    if queue_depth > thresholds.queue_limit {
        Some(ExceptionReason::QueueFull)
    } else if receiver_pf < thresholds.low_power {
        Some(ExceptionReason::NearDeath)
    } else if receiver_pf < thresholds.power_compare && receiver_pf < sender_pf {
        Some(ExceptionReason::PowerImbalance)
    } else {
        None
    }
}

/// Per-node routing state.
///
/// `current` is always either the base or the highest-ranked neighbor not in
/// the blacklist; the blacklist only ever grows. Exceptions and discovered
/// deaths land in the same blacklist because both mean the same thing to the
/// sender: never try that neighbor again.
#[derive(Debug, Clone)]
pub struct E3dNodeState {
    ranked: Vec<NeighborEntry>,
    blacklist: BTreeSet<usize>,
    current: Destination,
    ack_armed: bool,
}

impl E3dNodeState {
    pub fn new(ranked: Vec<NeighborEntry>) -> Self {
        let current = ranked
            .first()
            .map(|e| Destination::Node(e.neighbor))
            .unwrap_or(Destination::Base);
        // The very first assignment counts as a neighbor change, so the
        // first data packet to it is acknowledged.
        let ack_armed = matches!(current, Destination::Node(_));
        Self {
            ranked,
            blacklist: BTreeSet::new(),
            current,
            ack_armed,
        }
    }

    /// Next hop for every outgoing packet until an exception or a delivery
    /// failure forces a change.
    pub fn next_hop(&self) -> Destination {
        self.current
    }

    /// Whether the next data packet to the current neighbor expects an
    /// acknowledgement reply.
    pub fn ack_pending(&self) -> bool {
        self.ack_armed
    }

    /// Call after the acknowledgement reply arrived.
    pub fn clear_ack(&mut self) {
        self.ack_armed = false;
    }

    pub fn blacklist(&self) -> &BTreeSet<usize> {
        &self.blacklist
    }

    /// Permanently drop `neighbor` (unreachable or objecting) and move to
    /// the best remaining entry. Arms the acknowledgement when the chosen
    /// destination is a new neighbor.
    pub fn mark_unreachable(&mut self, neighbor: usize) {
        self.blacklist.insert(neighbor);
        self.reselect();
    }

    /// Apply an exception addressed to `self_id`. Messages from a neighbor
    /// other than the current one arrive after the sender already moved on
    /// and are ignored. Returns whether the exception changed anything.
    pub fn handle_exception(&mut self, self_id: usize, ex: &ExceptionMessage) -> bool {
        if ex.to != self_id || self.current != Destination::Node(ex.from) {
            return false;
        }
        self.mark_unreachable(ex.from);
        true
    }

    fn reselect(&mut self) {
        let next = self
            .ranked
            .iter()
            .find(|e| !self.blacklist.contains(&e.neighbor))
            .map(|e| Destination::Node(e.neighbor))
            .unwrap_or(Destination::Base);
        if next != self.current {
            self.current = next;
            // Base is always reachable and never acknowledges.
            self.ack_armed = matches!(next, Destination::Node(_));
        }
    }
}
