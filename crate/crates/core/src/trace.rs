//! Event stream emitted by the engine as it runs.
//!
//! Every energy charge, packet movement, death, and control exchange is
//! announced to a [`TraceSink`] in the exact order it happens, which is
//! enough to reconstruct the whole simulation after the fact: the replay
//! checker rebuilds batteries and routing decisions from nothing but these
//! events and the starting configuration.

use std::fmt;
use std::io::{self, Write};

use crate::strategies::{Destination, ExceptionReason};

/// What a control message was for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlPurpose {
    /// Route/table establishment before the first iteration.
    Setup,
    /// A fresh cluster head announcing itself.
    ClusterAd,
    /// A member confirming which head it joined.
    ClusterJoin,
    /// Acknowledgement of the first data packet to a new neighbor.
    Ack,
    /// A receiver telling a sender to reroute.
    Exception,
}

impl ControlPurpose {
    pub fn name(self) -> &'static str {
        match self {
            ControlPurpose::Setup => "setup",
            ControlPurpose::ClusterAd => "cluster_ad",
            ControlPurpose::ClusterJoin => "cluster_join",
            ControlPurpose::Ack => "ack",
            ControlPurpose::Exception => "exception",
        }
    }
}

/// One step of the simulation. Charge-bearing events (`DataTx`, `DataRx`,
/// `ControlTx`, `ControlRx`) carry both the cost paid and the battery level
/// left afterwards so a replay can verify every joule.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    IterationStart {
        iteration: u64,
    },
    PacketGenerated {
        packet: u64,
        node: usize,
    },
    DataTx {
        packet: u64,
        from: usize,
        to: Destination,
        distance: f64,
        cost: f64,
        remaining: f64,
        /// Sender's power fraction after paying, stamped into the packet.
        pf_after: f64,
    },
    DataRx {
        packet: u64,
        node: usize,
        from: usize,
        cost: f64,
        remaining: f64,
    },
    /// A transmission that reached nobody: the target was already dead or
    /// died paying for the receive. The sender's charge stands.
    DeliveryFailed {
        packet: u64,
        from: usize,
        to: usize,
    },
    ControlTx {
        node: usize,
        purpose: ControlPurpose,
        distance: f64,
        cost: f64,
        remaining: f64,
    },
    ControlRx {
        node: usize,
        purpose: ControlPurpose,
        cost: f64,
        remaining: f64,
    },
    /// Receiver-side objection, recorded before the control exchange that
    /// carries it. The power fractions are the values the check ran on.
    Exception {
        from: usize,
        to: usize,
        reason: ExceptionReason,
        receiver_pf: f64,
        sender_pf: f64,
        queue_depth: u32,
    },
    PacketDelivered {
        packet: u64,
        origin: usize,
        hops: u32,
    },
    PacketDropped {
        packet: u64,
        origin: usize,
        holder: usize,
    },
    NodeDied {
        node: usize,
        iteration: u64,
        /// Energy still in the battery when the fatal action proved
        /// unaffordable; zero when the battery drained to exactly nothing.
        stranded: f64,
    },
    IterationEnd {
        iteration: u64,
        alive: usize,
    },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::IterationStart { iteration } => write!(f, "it {iteration} start"),
            TraceEvent::PacketGenerated { packet, node } => write!(f, "gen p{packet} @ n{node}"),
            TraceEvent::DataTx {
                packet,
                from,
                to,
                distance,
                cost,
                remaining,
                pf_after,
            } => write!(
                f,
                "tx p{packet} n{from} -> {to} d={distance:.3} cost={cost:.6e} left={remaining:.6e} pf={pf_after:.4}"
            ),
            TraceEvent::DataRx {
                packet,
                node,
                from,
                cost,
                remaining,
            } => write!(
                f,
                "rx p{packet} n{node} <- n{from} cost={cost:.6e} left={remaining:.6e}"
            ),
            TraceEvent::DeliveryFailed { packet, from, to } => {
                write!(f, "lost p{packet} n{from} -> n{to}")
            }
            TraceEvent::ControlTx {
                node,
                purpose,
                distance,
                cost,
                remaining,
            } => write!(
                f,
                "ctl-tx n{node} {} d={distance:.3} cost={cost:.6e} left={remaining:.6e}",
                purpose.name()
            ),
            TraceEvent::ControlRx {
                node,
                purpose,
                cost,
                remaining,
            } => write!(
                f,
                "ctl-rx n{node} {} cost={cost:.6e} left={remaining:.6e}",
                purpose.name()
            ),
            TraceEvent::Exception {
                from,
                to,
                reason,
                receiver_pf,
                sender_pf,
                queue_depth,
            } => write!(
                f,
                "exception n{from} -> n{to} {} rpf={receiver_pf:.4} spf={sender_pf:.4} q={queue_depth}",
                reason.name()
            ),
            TraceEvent::PacketDelivered {
                packet,
                origin,
                hops,
            } => write!(f, "delivered p{packet} origin=n{origin} hops={hops}"),
            TraceEvent::PacketDropped {
                packet,
                origin,
                holder,
            } => write!(f, "dropped p{packet} origin=n{origin} holder=n{holder}"),
            TraceEvent::NodeDied {
                node,
                iteration,
                stranded,
            } => write!(f, "died n{node} it={iteration} stranded={stranded:.6e}"),
            TraceEvent::IterationEnd { iteration, alive } => {
                write!(f, "it {iteration} end alive={alive}")
            }
        }
    }
}

/// Receives every event as it happens.
pub trait TraceSink {
    fn record(&mut self, event: &TraceEvent);
}

/// Discards everything; the default for plain runs.
#[derive(Debug, Default)]
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _event: &TraceEvent) {}
}

/// Keeps every event in memory, for tests and replay comparisons.
#[derive(Debug, Default)]
pub struct VecSink {
    pub events: Vec<TraceEvent>,
}

impl TraceSink for VecSink {
    fn record(&mut self, event: &TraceEvent) {
        self.events.push(event.clone());
    }
}

/// Streams one line per event to a writer. Write errors are remembered and
/// surfaced by [`WriterSink::finish`] rather than interrupting the run.
pub struct WriterSink<W: Write> {
    writer: W,
    error: Option<io::Error>,
}

impl<W: Write> WriterSink<W> {
    pub fn new(writer: W) -> Self {
        Self {
            writer,
            error: None,
        }
    }

    pub fn finish(mut self) -> io::Result<()> {
        if let Some(err) = self.error.take() {
            return Err(err);
        }
        self.writer.flush()
    }
}

impl<W: Write> TraceSink for WriterSink<W> {
    fn record(&mut self, event: &TraceEvent) {
        if self.error.is_some() {
            return;
        }
        if let Err(err) = writeln!(self.writer, "{event}") {
            self.error = Some(err);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn events_render_one_line_each() {
        let events = vec![
            TraceEvent::IterationStart { iteration: 3 },
            TraceEvent::DataTx {
                packet: 7,
                from: 1,
                to: Destination::Node(2),
                distance: 14.0,
                cost: 1.196e-4,
                remaining: 0.4,
                pf_after: 0.8,
            },
            TraceEvent::Exception {
                from: 2,
                to: 1,
                reason: ExceptionReason::QueueFull,
                receiver_pf: 0.5,
                sender_pf: 0.9,
                queue_depth: 11,
            },
            TraceEvent::IterationEnd {
                iteration: 3,
                alive: 10,
            },
        ];
        let mut sink = WriterSink::new(Vec::new());
        for e in &events {
            sink.record(e);
        }
        let text = String::from_utf8(sink.writer).unwrap();
        assert_eq!(text.lines().count(), events.len());
        assert!(text.contains("it 3 start"));
        assert!(text.contains("queue_full"));
        assert!(text.lines().all(|l| !l.is_empty()));
    }

    #[test]
    fn vec_sink_keeps_order() {
        let mut sink = VecSink::default();
        sink.record(&TraceEvent::IterationStart { iteration: 0 });
        sink.record(&TraceEvent::IterationEnd {
            iteration: 0,
            alive: 5,
        });
        assert_eq!(sink.events.len(), 2);
        assert_eq!(sink.events[0], TraceEvent::IterationStart { iteration: 0 });
    }
}
