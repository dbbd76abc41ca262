//! DC network parameters and the per-step algebraic bus solve.
//!
//! The distribution chain is solved quasi-statically each step: pooled EMF
//! behind the effective reactance, an average-value rectifier (ideal gain
//! plus a commutation droop proportional to current), the line resistance,
//! and the bus node feeding the lumped load in parallel with the charging
//! current sink. Load current is in phase with the bus voltage, so the
//! phasor closure reduces to one quadratic in the bus voltage.

/// Bus-tie configuration: how many MTG + ATG blocks feed the charging bus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusMode {
    /// Bus ties closed; both generator blocks pooled.
    RingMode,
    /// Bus ties open; a single block feeds the bus.
    SplitPlantMode,
}

impl BusMode {
    /// Number of generator/rectifier units feeding the bus.
    pub fn units(self) -> f64 {
        match self {
            BusMode::RingMode => 2.0,
            BusMode::SplitPlantMode => 1.0,
        }
    }
}

/// Static network parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    /// Distribution line resistance in ohms.
    pub r_line_ohm: f64,
    /// Lumped propulsion + zonal load resistance in ohms.
    pub r_load_ohm: f64,
    /// Average-value rectifier gain, AC phasor magnitude to DC voltage.
    pub rectifier_gain: f64,
    /// Commutation droop of one rectifier unit, in ohms. The drop is a
    /// lossless voltage-time effect, not a dissipation.
    pub r_commutation_ohm: f64,
    /// Rated bus voltage in volts.
    pub bus_rated_voltage_v: f64,
    /// Bus-tie mode.
    pub mode: BusMode,
    /// Relative load-admittance step that resets the generator reactance
    /// to its transient value.
    pub disturbance_threshold: f64,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.rectifier_gain <= 0.0 {
            return Err("rectifier_gain must be positive".into());
        }
        if self.r_load_ohm < 10.0 * self.r_line_ohm {
            return Err(format!(
                "r_load ({}) must dominate r_line ({})",
                self.r_load_ohm, self.r_line_ohm
            ));
        }
        if self.r_line_ohm < 0.0 || self.r_commutation_ohm < 0.0 {
            return Err("series resistances must be nonnegative".into());
        }
        Ok(())
    }

    /// Pooled commutation droop of the paralleled rectifier units.
    pub fn r_source_ohm(&self) -> f64 {
        self.r_commutation_ohm / self.mode.units()
    }

    /// DC-referred pooled reactance for a per-unit AC reactance.
    pub fn x_dc_ohm(&self, x_unit_ac_ohm: f64) -> f64 {
        self.rectifier_gain * self.rectifier_gain * x_unit_ac_ohm / self.mode.units()
    }
}

/// Result of the algebraic network solve at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusSolution {
    /// Bus voltage in volts.
    pub v_bus_v: f64,
    /// Total source current on the DC side, in amps.
    pub i_total_a: f64,
    /// Rectifier output voltage in volts (`v_bus + r_line * i_total`).
    pub v_rect_v: f64,
    /// Regulated terminal voltage, DC-referred.
    pub v_terminal_v: f64,
    /// Reactive power absorbed across the machine reactance, in var.
    pub q_machine_var: f64,
    /// Real power at the rectifier output, in watts.
    pub p_output_w: f64,
}

/// Solves the bus voltage for a given EMF, pooled reactance, and charging
/// sink current. Returns `None` when the EMF cannot support the load
/// (voltage collapse).
pub fn solve_bus(
    emf_dc_v: f64,
    x_dc_ohm: f64,
    r_source_ohm: f64,
    r_line_ohm: f64,
    r_load_ohm: f64,
    i_charge_a: f64,
) -> Option<BusSolution> {
    let g = if r_load_ohm.is_finite() {
        1.0 / r_load_ohm
    } else {
        0.0
    };
    let r_tot = r_source_ohm + r_line_ohm;

    // e^2 = ((1 + r G) V + r i)^2 + (x (G V + i))^2, quadratic in V.
    let a = 1.0 + r_tot * g;
    let b = r_tot * i_charge_a;
    let c = x_dc_ohm * g;
    let d = x_dc_ohm * i_charge_a;

    let qa = a * a + c * c;
    let qb = a * b + c * d;
    let qc = b * b + d * d - emf_dc_v * emf_dc_v;
    let disc = qb * qb - qa * qc;
    if disc < 0.0 {
        return None;
    }
    let v_bus = (-qb + disc.sqrt()) / qa;
    if !v_bus.is_finite() || v_bus < 0.0 {
        return None;
    }

    let i_total = g * v_bus + i_charge_a;
    Some(BusSolution {
        v_bus_v: v_bus,
        i_total_a: i_total,
        v_rect_v: v_bus + r_line_ohm * i_total,
        v_terminal_v: v_bus + r_tot * i_total,
        q_machine_var: x_dc_ohm * i_total * i_total,
        p_output_w: (v_bus + r_line_ohm * i_total) * i_total,
    })
}
