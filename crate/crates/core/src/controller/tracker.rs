//! PI current tracker turning a charging-current reference into buck duty.

/// PI law with duty feedforward and conditional anti-windup. The
/// feedforward term `v_cap / v_bus` is the steady duty of the converter,
/// so the PI only has to trim for parasitics and transients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentTracker {
    /// Proportional gain, duty per amp of error.
    pub kp: f64,
    /// Integral gain, duty per amp-second of error.
    pub ki: f64,
    /// Integral accumulator in duty units.
    pub integrator: f64,
}

impl CurrentTracker {
    pub fn new(kp: f64, ki: f64) -> Self {
        Self {
            kp,
            ki,
            integrator: 0.0,
        }
    }

    pub fn reset(&mut self) {
        self.integrator = 0.0;
    }

    /// One update; returns duty in `[0, 1]`.
    pub fn update(
        &mut self,
        reference_a: f64,
        measured_a: f64,
        v_bus_v: f64,
        v_cap_v: f64,
        dt_s: f64,
    ) -> f64 {
        if reference_a <= 0.0 {
            self.integrator = 0.0;
            return 0.0;
        }
        let error = reference_a - measured_a;
        let feedforward = if v_bus_v > 0.0 {
            (v_cap_v / v_bus_v).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let unsaturated = feedforward + self.kp * error + self.integrator;
        let duty = unsaturated.clamp(0.0, 1.0);
        // Integrate only while the output is free or the error drives it
        // back off the rail.
        let saturated_high = unsaturated > 1.0 && error > 0.0;
        let saturated_low = unsaturated < 0.0 && error < 0.0;
        if !saturated_high && !saturated_low {
            self.integrator += self.ki * error * dt_s;
        }
        duty
    }
}
