//! First-order radio energy model and per-node battery accounting.
//!
//! Transmitting `b` bits over distance `d` costs `b * elec_per_bit +
//! b * amp_per_bit_per_m2 * d^2`; receiving costs the electronics term only.
//! The amplifier term grows with the square of the distance, which is what
//! makes long hops expensive and relaying worthwhile.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("control messages ({control_bits} bits) cannot exceed data packets ({data_bits} bits)")]
    ControlLargerThanData { control_bits: u32, data_bits: u32 },
}

/// Radio and battery constants shared by every node in a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParams {
    /// Electronics cost per bit, J/bit (applies to both send and receive).
    pub elec_per_bit: f64,
    /// Amplifier cost per bit per square meter, J/(bit*m^2).
    pub amp_per_bit_per_m2: f64,
    /// Payload size of one data packet, bits.
    pub data_bits: u32,
    /// Size of one control message (setup, join, ack, exception), bits.
    pub control_bits: u32,
    /// Starting charge of every battery, J.
    pub initial_battery: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            elec_per_bit: 50e-9,
            amp_per_bit_per_m2: 100e-12,
            data_bits: 2000,
            control_bits: 100,
            initial_battery: 0.5,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let positive = [
            ("elec_per_bit", self.elec_per_bit),
            ("amp_per_bit_per_m2", self.amp_per_bit_per_m2),
            ("initial_battery", self.initial_battery),
            ("data_bits", f64::from(self.data_bits)),
            ("control_bits", f64::from(self.control_bits)),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(EnergyError::NonPositive { name, value });
            }
        }
        if self.control_bits > self.data_bits {
            return Err(EnergyError::ControlLargerThanData {
                control_bits: self.control_bits,
                data_bits: self.data_bits,
            });
        }
        Ok(())
    }

    /// Cost of transmitting `bits` over `distance` meters.
    pub fn tx_cost(&self, bits: u32, distance: f64) -> f64 {
        assert!(
            distance >= 0.0 && distance.is_finite(),
            "transmit distance must be non-negative, got {distance}"
        );
        let bits = f64::from(bits);
        bits * self.elec_per_bit + bits * self.amp_per_bit_per_m2 * distance * distance
    }

    /// Cost of receiving `bits`; independent of distance.
    pub fn rx_cost(&self, bits: u32) -> f64 {
        f64::from(bits) * self.elec_per_bit
    }

    pub fn data_tx(&self, distance: f64) -> f64 {
        self.tx_cost(self.data_bits, distance)
    }

    pub fn data_rx(&self) -> f64 {
        self.rx_cost(self.data_bits)
    }

    pub fn control_tx(&self, distance: f64) -> f64 {
        self.tx_cost(self.control_bits, distance)
    }

    pub fn control_rx(&self) -> f64 {
        self.rx_cost(self.control_bits)
    }
}

/// Result of asking a battery to pay for one radio action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DrainOutcome {
    /// The action completed; the cost was subtracted in full. A cost exactly
    /// equal to the remaining charge still completes, leaving zero.
    Ok,
    /// The battery could not cover the cost. Nothing is subtracted from the
    /// action's point of view: the action did not happen, the leftover
    /// `stranded` charge is wiped, and the battery reads empty.
    Died { stranded: f64 },
}

/// Single-node battery. Tracks the initial charge so power fractions can be
/// reported without outside bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct Battery {
    remaining: f64,
    initial: f64,
}

impl Battery {
    pub fn new(initial: f64) -> Self {
        assert!(
            initial > 0.0 && initial.is_finite(),
            "battery capacity must be positive, got {initial}"
        );
        Self {
            remaining: initial,
            initial,
        }
    }

    pub fn remaining(&self) -> f64 {
        self.remaining
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    /// Fraction of the initial charge still available, in `[0, 1]`.
    pub fn power_fraction(&self) -> f64 {
        self.remaining / self.initial
    }

    pub fn is_empty(&self) -> bool {
        self.remaining == 0.0
    }

    /// Pay `cost` joules. Negative or non-finite costs are contract
    /// violations and panic.
    pub fn drain(&mut self, cost: f64) -> DrainOutcome {
        assert!(
            cost >= 0.0 && cost.is_finite(),
            "drain cost must be non-negative and finite, got {cost}"
        );
        if cost <= self.remaining {
            self.remaining -= cost;
            DrainOutcome::Ok
        } else {
            let stranded = self.remaining;
            self.remaining = 0.0;
            DrainOutcome::Died { stranded }
        }
    }
}
