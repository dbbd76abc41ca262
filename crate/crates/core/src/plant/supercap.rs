//! Supercapacitor bank: stored energy follows `E = C V^2 / 2`.

use crate::error::{Result, SimError};

/// Supercapacitor state. Voltage only rises while charging; the discharge
/// path (S2) is never closed in the scenarios simulated here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupercapState {
    /// Bank capacitance in farads.
    pub capacitance_f: f64,
    /// Terminal voltage in volts, never negative.
    pub voltage_v: f64,
}

impl SupercapState {
    pub fn new(capacitance_f: f64) -> Self {
        Self {
            capacitance_f,
            voltage_v: 0.0,
        }
    }

    /// Stored energy in joules.
    pub fn stored_energy_j(&self) -> f64 {
        0.5 * self.capacitance_f * self.voltage_v * self.voltage_v
    }

    /// Integrates the charging current over one step. Current must be
    /// nonnegative; the diode blocks any reverse path.
    pub(crate) fn integrate(&mut self, current_a: f64, dt_s: f64) {
        debug_assert!(current_a >= 0.0);
        self.voltage_v += current_a * dt_s / self.capacitance_f;
    }
}

/// Energy stored at a given capacitance and voltage (joules).
pub fn supercap_energy(capacitance_f: f64, voltage_v: f64) -> f64 {
    0.5 * capacitance_f * voltage_v * voltage_v
}

/// Capacitance required to hold `energy_j` at `v_final_v`.
pub fn required_capacitance(energy_j: f64, v_final_v: f64) -> Result<f64> {
    if v_final_v <= 0.0 {
        return Err(SimError::Domain {
            relation: "required_capacitance",
            reason: "final voltage must be positive",
        });
    }
    Ok(2.0 * energy_j / (v_final_v * v_final_v))
}
