//! Equivalent generator unit: internal EMF behind a time-varying reactance.
//!
//! All voltages in this module are DC-side referred (AC phasor magnitude
//! times the rectifier gain) so the network solve works in one domain.

/// Parameters of one MTG + ATG + rectifier block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorParams {
    /// Nominal internal EMF in volts (DC-referred).
    pub emf_nominal_v: f64,
    /// Synchronous reactance of one unit in ohms (AC side).
    pub x_sync_ohm: f64,
    /// Transient reactance of one unit in ohms (AC side), below `x_sync_ohm`.
    pub x_transient_ohm: f64,
    /// Time constant for the transient reactance relaxing back to synchronous.
    pub t_reactance_relax_s: f64,
    /// First-order exciter (AVR) lag in seconds.
    pub t_exciter_s: f64,
    /// Excitation ceiling in volts (DC-referred).
    pub emf_ceiling_v: f64,
    /// AVR terminal-voltage setpoint in volts (DC-referred).
    pub v_terminal_setpoint_v: f64,
    /// Apparent power rating of one unit in volt-amps.
    pub rated_mva: f64,
}

impl GeneratorParams {
    /// Enforces the structural invariants of the parameter set.
    pub fn validate(&self) -> Result<(), String> {
        if self.x_transient_ohm >= self.x_sync_ohm {
            return Err(format!(
                "x_transient ({}) must be below x_sync ({})",
                self.x_transient_ohm, self.x_sync_ohm
            ));
        }
        if self.t_reactance_relax_s <= 0.0 || self.t_exciter_s <= 0.0 {
            return Err("generator time constants must be positive".into());
        }
        if self.emf_ceiling_v < self.emf_nominal_v {
            return Err("emf_ceiling must be at least emf_nominal".into());
        }
        Ok(())
    }
}

/// Dynamic state of the equivalent generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorState {
    /// Exciter-driven internal EMF in volts (DC-referred).
    pub emf_v: f64,
    /// Effective reactance in ohms, within `[x_transient, x_sync]`.
    pub x_effective_ohm: f64,
    /// Reactive power absorbed by the machine reactance, in var.
    pub q_output_var: f64,
    /// Real power delivered at the rectifier output, in watts.
    pub p_output_w: f64,
    /// Time of the last detected load disturbance, in seconds.
    pub last_disturbance_time_s: f64,
}

impl GeneratorState {
    /// Starts at the relaxed reactance with the given EMF.
    pub fn at_steady(params: &GeneratorParams) -> Self {
        Self {
            emf_v: params.emf_nominal_v,
            x_effective_ohm: params.x_sync_ohm,
            q_output_var: 0.0,
            p_output_w: 0.0,
            last_disturbance_time_s: f64::NEG_INFINITY,
        }
    }

    /// Exciter lag: EMF relaxes toward the value that would put the terminal
    /// at its setpoint under the present loading, clamped at the ceiling.
    pub(crate) fn advance_emf(&mut self, params: &GeneratorParams, emf_target_v: f64, dt_s: f64) {
        let target = emf_target_v.clamp(0.0, params.emf_ceiling_v);
        self.emf_v += (target - self.emf_v) * dt_s / params.t_exciter_s;
    }

    /// Reactance relaxation from transient toward synchronous.
    pub(crate) fn advance_reactance(&mut self, params: &GeneratorParams, dt_s: f64) {
        self.x_effective_ohm +=
            (params.x_sync_ohm - self.x_effective_ohm) * dt_s / params.t_reactance_relax_s;
        self.x_effective_ohm = self
            .x_effective_ohm
            .clamp(params.x_transient_ohm, params.x_sync_ohm);
    }

    /// A detected load step drops the effective reactance to transient.
    pub(crate) fn reset_to_transient(&mut self, params: &GeneratorParams, now_s: f64) {
        self.x_effective_ohm = params.x_transient_ohm;
        self.last_disturbance_time_s = now_s;
    }
}
