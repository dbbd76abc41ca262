//! Fast IGBT gates for the charging (S1) and discharge (S2) paths.
//!
//! Models the device constraints that matter to the charging procedures:
//! finite turn-off delay during which the switch still conducts, a
//! blocking-voltage rating audited while open, and the mutual-exclusion
//! interlock that keeps the PPL from ever drawing straight from the bus.

use crate::error::{Result, SimError};

/// Turn-off delay of the charging chopper module, seconds.
pub const TURNOFF_DELAY_S: f64 = 7.3e-6;
/// Blocking-voltage rating while turned off, volts.
pub const BLOCKING_LIMIT_V: f64 = 6500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateCmd {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchPosition {
    Open,
    Closed,
    /// Open was commanded; the device conducts until the deadline passes.
    TurningOff,
}

/// One gate: commanded vs actual position plus device ratings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchState {
    pub commanded: GateCmd,
    pub actual: SwitchPosition,
    pub turnoff_deadline_s: f64,
    pub turnoff_delay_s: f64,
    pub blocking_voltage_limit_v: f64,
    /// Highest voltage observed across the device while blocking.
    pub peak_blocking_v: f64,
}

impl SwitchState {
    fn open() -> Self {
        Self {
            commanded: GateCmd::Open,
            actual: SwitchPosition::Open,
            turnoff_deadline_s: f64::NEG_INFINITY,
            turnoff_delay_s: TURNOFF_DELAY_S,
            blocking_voltage_limit_v: BLOCKING_LIMIT_V,
            peak_blocking_v: 0.0,
        }
    }

    /// The device conducts while closed or still turning off.
    pub fn is_conducting(&self) -> bool {
        self.actual != SwitchPosition::Open
    }

    /// Fraction of the step `[step_start, step_start + dt)` during which the
    /// device conducts. A turn-off shorter than the step shows up as a
    /// fractional conduction on that step.
    pub fn conduction_fraction(&self, step_start_s: f64, dt_s: f64) -> f64 {
        match self.actual {
            SwitchPosition::Closed => 1.0,
            SwitchPosition::Open => 0.0,
            SwitchPosition::TurningOff => {
                ((self.turnoff_deadline_s - step_start_s) / dt_s).clamp(0.0, 1.0)
            }
        }
    }

    fn command(&mut self, cmd: GateCmd, now_s: f64) {
        match (cmd, self.actual) {
            (GateCmd::Closed, SwitchPosition::Open | SwitchPosition::TurningOff) => {
                self.commanded = GateCmd::Closed;
                self.actual = SwitchPosition::Closed;
            }
            (GateCmd::Open, SwitchPosition::Closed) => {
                self.commanded = GateCmd::Open;
                self.actual = SwitchPosition::TurningOff;
                self.turnoff_deadline_s = now_s + self.turnoff_delay_s;
            }
            // Idempotent commands leave the device untouched.
            (GateCmd::Closed, SwitchPosition::Closed)
            | (GateCmd::Open, SwitchPosition::Open | SwitchPosition::TurningOff) => {}
        }
    }

    fn advance(&mut self, now_s: f64) {
        if self.actual == SwitchPosition::TurningOff && now_s >= self.turnoff_deadline_s {
            self.actual = SwitchPosition::Open;
        }
    }

    fn check_blocking(&mut self, v_across: f64, name: &'static str, now_s: f64) -> Result<()> {
        if self.actual == SwitchPosition::Open {
            if v_across > self.peak_blocking_v {
                self.peak_blocking_v = v_across;
            }
            if v_across > self.blocking_voltage_limit_v {
                return Err(SimError::Overstress {
                    switch: name,
                    volts: v_across,
                    rating: self.blocking_voltage_limit_v,
                    time_s: now_s,
                });
            }
        }
        Ok(())
    }
}

/// The S1/S2 pair with its interlock bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchBank {
    pub s1: SwitchState,
    pub s2: SwitchState,
    /// Number of close commands rejected by the interlock.
    pub interlock_rejections: u64,
    pub last_rejection_s: f64,
}

impl SwitchBank {
    pub fn new() -> Self {
        Self {
            s1: SwitchState::open(),
            s2: SwitchState::open(),
            interlock_rejections: 0,
            last_rejection_s: f64::NEG_INFINITY,
        }
    }

    /// Applies a command pair. A close for one switch while the other is
    /// conducting (or commanded closed) is rejected and recorded; it is not
    /// fatal. Open commands always go through. `now_s` must be
    /// nondecreasing across calls.
    pub fn apply_gate(&mut self, s1_cmd: GateCmd, s2_cmd: GateCmd, now_s: f64) {
        // Opens first so a swap in the same call is still rejected while the
        // counterpart is turning off.
        if s1_cmd == GateCmd::Open {
            self.s1.command(GateCmd::Open, now_s);
        }
        if s2_cmd == GateCmd::Open {
            self.s2.command(GateCmd::Open, now_s);
        }
        if s1_cmd == GateCmd::Closed {
            if self.s2.is_conducting() || self.s2.commanded == GateCmd::Closed {
                self.interlock_rejections += 1;
                self.last_rejection_s = now_s;
            } else {
                self.s1.command(GateCmd::Closed, now_s);
            }
        }
        if s2_cmd == GateCmd::Closed {
            if self.s1.is_conducting() || self.s1.commanded == GateCmd::Closed {
                self.interlock_rejections += 1;
                self.last_rejection_s = now_s;
            } else {
                self.s2.command(GateCmd::Closed, now_s);
            }
        }
    }

    /// Resolves pending turn-offs whose deadline has passed.
    pub fn advance(&mut self, now_s: f64) {
        self.s1.advance(now_s);
        self.s2.advance(now_s);
    }

    /// Audits blocking voltages across both devices, recording peaks and
    /// failing on overstress.
    pub fn check_blocking(&mut self, v_across_s1: f64, v_across_s2: f64, now_s: f64) -> Result<()> {
        self.s1.check_blocking(v_across_s1, "S1", now_s)?;
        self.s2.check_blocking(v_across_s2, "S2", now_s)
    }

    /// True when both devices conduct at once; must be unreachable.
    pub fn both_conducting(&self) -> bool {
        self.s1.is_conducting() && self.s2.is_conducting()
    }
}

impl Default for SwitchBank {
    fn default() -> Self {
        Self::new()
    }
}
