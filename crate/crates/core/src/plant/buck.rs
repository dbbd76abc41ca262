//! Average-value buck converter feeding the supercapacitor bank.
//!
//! The converter is modeled at the duty-cycle level: within one step the
//! inductor sees `duty * v_bus` on its input side, so the steady state
//! satisfies `v_cap -> duty * v_bus` and the bus-side input current is
//! `duty * inductor_current`.

use super::supercap::SupercapState;

/// Buck converter state and filter parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuckState {
    /// Inductor current in amps, clamped at zero (diode blocks reverse flow).
    pub inductor_current_a: f64,
    /// Commanded duty in `[0, 1]`; forced to zero while the gate is open.
    pub duty: f64,
    /// Bus-side input current in amps: `duty * inductor_current` while gated.
    pub input_current_a: f64,
    /// Filter inductance in henries.
    pub l_filter_h: f64,
    /// Series parasitic resistance in ohms.
    pub r_parasitic_ohm: f64,
}

impl BuckState {
    pub fn new(l_filter_h: f64, r_parasitic_ohm: f64) -> Self {
        Self {
            inductor_current_a: 0.0,
            duty: 0.0,
            input_current_a: 0.0,
            l_filter_h,
            r_parasitic_ohm,
        }
    }
}

/// Gate drive for one step: whether S1 conducts and at what duty.
///
/// `conduction` scales the duty on the step where S1 turns off: the device
/// still conducts for the turn-off delay fraction of that step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuckDrive {
    pub gate_on: bool,
    pub duty: f64,
    pub conduction: f64,
}

impl BuckDrive {
    pub fn off() -> Self {
        Self {
            gate_on: false,
            duty: 0.0,
            conduction: 0.0,
        }
    }

    pub fn on(duty: f64) -> Self {
        Self {
            gate_on: true,
            duty,
            conduction: 1.0,
        }
    }

    fn effective_duty(&self) -> f64 {
        if self.gate_on {
            (self.duty * self.conduction).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Inductor-current derivative at a given operating point.
fn di_dt(buck: &BuckState, cap: &SupercapState, v_bus: f64, duty: f64) -> f64 {
    (duty * v_bus - cap.voltage_v - buck.r_parasitic_ohm * buck.inductor_current_a)
        / buck.l_filter_h
}

/// Advances inductor current and capacitor voltage by one explicit Euler step.
///
/// When the gate is open the duty is forced to zero and the inductor current
/// free-wheels through the diode, decaying but never reversing. Capacitor
/// voltage is nondecreasing because the current is clamped at zero.
pub fn buck_average_step(
    buck: &BuckState,
    v_bus: f64,
    cap: &SupercapState,
    drive: BuckDrive,
    dt_s: f64,
) -> (BuckState, SupercapState) {
    debug_assert!(dt_s > 0.0);
    let duty = drive.effective_duty();

    let di = di_dt(buck, cap, v_bus, duty);
    let mut next = *buck;
    let mut next_cap = *cap;
    next.inductor_current_a = (buck.inductor_current_a + di * dt_s).max(0.0);
    next_cap.integrate(buck.inductor_current_a, dt_s);
    next.duty = duty;
    next.input_current_a = duty * next.inductor_current_a;
    (next, next_cap)
}

/// Heun (explicit trapezoidal) variant of [`buck_average_step`].
pub fn buck_heun_step(
    buck: &BuckState,
    v_bus: f64,
    cap: &SupercapState,
    drive: BuckDrive,
    dt_s: f64,
) -> (BuckState, SupercapState) {
    debug_assert!(dt_s > 0.0);
    let duty = drive.effective_duty();

    let di0 = di_dt(buck, cap, v_bus, duty);
    let mut mid = *buck;
    let mut mid_cap = *cap;
    mid.inductor_current_a = (buck.inductor_current_a + di0 * dt_s).max(0.0);
    mid_cap.integrate(buck.inductor_current_a, dt_s);
    let di1 = di_dt(&mid, &mid_cap, v_bus, duty);

    let mut next = *buck;
    let mut next_cap = *cap;
    next.inductor_current_a = (buck.inductor_current_a + 0.5 * (di0 + di1) * dt_s).max(0.0);
    next_cap.integrate(
        0.5 * (buck.inductor_current_a + mid.inductor_current_a),
        dt_s,
    );
    next.duty = duty;
    next.input_current_a = duty * next.inductor_current_a;
    (next, next_cap)
}
