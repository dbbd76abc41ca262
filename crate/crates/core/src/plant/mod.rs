//! Continuous-time electrical model of the charging path: equivalent
//! generator, rectifier, DC network, buck charger and supercapacitor,
//! advanced by a fixed-step integrator.

pub mod buck;
pub mod generator;
pub mod network;
pub mod supercap;

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::switchgear::SwitchBank;
use buck::{buck_average_step, buck_heun_step, BuckDrive, BuckState};
use generator::{GeneratorParams, GeneratorState};
use network::{solve_bus, BusSolution, NetworkParams};
use supercap::SupercapState;

/// Explicit integration scheme for the plant states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Euler,
    Heun,
}

/// Full parameter set for one plant instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    pub generator: GeneratorParams,
    pub network: NetworkParams,
    pub integrator: Integrator,
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        self.generator
            .validate()
            .and_then(|()| self.network.validate())
            .map_err(|reason| {
                SimError::Config(crate::error::ConfigError::Invalid {
                    key: "plant",
                    reason,
                })
            })
    }
}

/// One time-slice of the whole plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub time_s: f64,
    pub step: u64,
    pub generator: GeneratorState,
    pub bus_voltage_v: f64,
    pub bus_current_a: f64,
    pub buck: BuckState,
    pub supercap: SupercapState,
    pub switches: SwitchBank,
    /// Total load admittance at the previous step, for disturbance detection.
    last_admittance_s: f64,
}

/// Instantaneous measurement used by the controller and telemetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub time_s: f64,
    pub v_bus_v: f64,
    pub q_mtg_var: f64,
    pub i_charge_a: f64,
    pub v_cap_v: f64,
    pub stored_energy_j: f64,
}

/// Terminal current magnitude before charging: `|E / (jX + R_line + R_load)|`.
pub fn steady_terminal_current(
    emf_v: f64,
    x_g_ohm: f64,
    r_line_ohm: f64,
    r_load_ohm: f64,
) -> Result<f64> {
    let z = Complex64::new(r_line_ohm + r_load_ohm, x_g_ohm);
    if z.norm() == 0.0 {
        return Err(SimError::ZeroDenominator {
            relation: "steady_terminal_current",
        });
    }
    Ok((Complex64::new(emf_v, 0.0) / z).norm())
}

/// Bus voltage at the magnitude level: `E - X * I`.
pub fn steady_bus_voltage(emf_v: f64, x_g_ohm: f64, i_load_a: f64) -> f64 {
    emf_v - x_g_ohm * i_load_a
}

/// Charging inrush the instant after an uncharged bank is connected: the
/// load is short-circuited out of the path, `|E / (jX_eff + R_line)|`.
pub fn transient_charging_current(emf_v: f64, x_eff_ohm: f64, r_line_ohm: f64) -> Result<f64> {
    let z = Complex64::new(r_line_ohm, x_eff_ohm);
    if z.norm() == 0.0 {
        return Err(SimError::ZeroDenominator {
            relation: "transient_charging_current",
        });
    }
    Ok((Complex64::new(emf_v, 0.0) / z).norm())
}

impl PlantState {
    /// Builds a plant resting at the relaxed operating point implied by the
    /// parameters (generator at nominal EMF, bank empty, switches open).
    pub fn at_rest(
        params: &PlantParams,
        capacitance_f: f64,
        l_filter_h: f64,
        r_par_ohm: f64,
    ) -> Result<Self> {
        let generator = GeneratorState::at_steady(&params.generator);
        let x_dc = params.network.x_dc_ohm(generator.x_effective_ohm);
        let sol = solve_bus(
            generator.emf_v,
            x_dc,
            params.network.r_source_ohm(),
            params.network.r_line_ohm,
            params.network.r_load_ohm,
            0.0,
        )
        .ok_or(SimError::NonFinite {
            quantity: "bus_voltage",
            time_s: 0.0,
            step: 0,
        })?;

        let mut state = Self {
            time_s: 0.0,
            step: 0,
            generator,
            bus_voltage_v: sol.v_bus_v,
            bus_current_a: sol.i_total_a,
            buck: BuckState::new(l_filter_h, r_par_ohm),
            supercap: SupercapState::new(capacitance_f),
            switches: SwitchBank::new(),
            last_admittance_s: admittance(&sol),
        };
        state.generator.q_output_var = sol.q_machine_var;
        state.generator.p_output_w = sol.p_output_w;
        Ok(state)
    }

    pub fn measure(&self) -> MetricSample {
        MetricSample {
            time_s: self.time_s,
            v_bus_v: self.bus_voltage_v,
            q_mtg_var: self.generator.q_output_var,
            i_charge_a: self.buck.input_current_a,
            v_cap_v: self.supercap.voltage_v,
            stored_energy_j: self.supercap.stored_energy_j(),
        }
    }
}

fn admittance(sol: &BusSolution) -> f64 {
    sol.i_total_a / sol.v_bus_v.max(1e-9)
}

fn check_finite(value: f64, quantity: &'static str, time_s: f64, step: u64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(SimError::NonFinite {
            quantity,
            time_s,
            step,
        })
    }
}

/// Advances the plant by one step.
///
/// Order within the step: resolve switch conduction, solve the bus
/// algebraically for the present charging draw, advance the buck and bank,
/// then relax exciter and reactance. A load-admittance step beyond the
/// configured threshold resets the effective reactance to transient.
pub fn plant_step(
    state: &PlantState,
    params: &PlantParams,
    duty_command: f64,
    dt_s: f64,
) -> Result<PlantState> {
    debug_assert!(dt_s > 0.0);
    let mut next = *state;
    let now = state.time_s;

    // S1 conduction for this step (1.0 closed, 0.0 open, fractional on the
    // turn-off step), then the bus-side charging draw of the buck.
    let conduction = state.switches.s1.conduction_fraction(now, dt_s);
    let drive = BuckDrive {
        gate_on: conduction > 0.0,
        duty: duty_command.clamp(0.0, 1.0),
        conduction,
    };
    let i_charge = if drive.gate_on {
        drive.duty * drive.conduction * state.buck.inductor_current_a
    } else {
        0.0
    };

    // Quasi-static network solve at the present EMF and reactance.
    let x_dc = params.network.x_dc_ohm(state.generator.x_effective_ohm);
    let sol = solve_bus(
        state.generator.emf_v,
        x_dc,
        params.network.r_source_ohm(),
        params.network.r_line_ohm,
        params.network.r_load_ohm,
        i_charge,
    )
    .ok_or(SimError::NonFinite {
        quantity: "bus_voltage",
        time_s: now,
        step: state.step,
    })?;

    // Buck + supercapacitor advance against the solved bus voltage.
    let (new_buck, new_cap) = match params.integrator {
        Integrator::Euler => {
            buck_average_step(&state.buck, sol.v_bus_v, &state.supercap, drive, dt_s)
        }
        Integrator::Heun => buck_heun_step(&state.buck, sol.v_bus_v, &state.supercap, drive, dt_s),
    };

    // Exciter drives the EMF toward the value that restores the terminal
    // setpoint under the present loading.
    let x_drop = x_dc * sol.i_total_a;
    let emf_target = (params.generator.v_terminal_setpoint_v
        * params.generator.v_terminal_setpoint_v
        + x_drop * x_drop)
        .sqrt();
    next.generator
        .advance_emf(&params.generator, emf_target, dt_s);

    // Reactance dynamics: reset on a detected load step, otherwise relax.
    let y_now = admittance(&sol);
    let y_ref = state.last_admittance_s.max(1e-12);
    if (y_now - state.last_admittance_s).abs() / y_ref > params.network.disturbance_threshold {
        next.generator.reset_to_transient(&params.generator, now);
    } else {
        next.generator.advance_reactance(&params.generator, dt_s);
    }
    next.last_admittance_s = y_now;

    next.generator.q_output_var = sol.q_machine_var;
    next.generator.p_output_w = sol.p_output_w;
    next.bus_voltage_v = sol.v_bus_v;
    next.bus_current_a = sol.i_total_a;
    next.buck = new_buck;
    next.supercap = new_cap;
    next.time_s = now + dt_s;
    next.step = state.step + 1;

    // Switch timing and blocking-voltage audit against the new operating point.
    next.switches.advance(next.time_s);
    let v_s1 = if next.buck.inductor_current_a > 0.0 {
        next.bus_voltage_v
    } else {
        (next.bus_voltage_v - next.supercap.voltage_v).max(0.0)
    };
    let v_s2 = next.supercap.voltage_v;
    next.switches.check_blocking(v_s1, v_s2, next.time_s)?;

    check_finite(next.bus_voltage_v, "bus_voltage", next.time_s, next.step)?;
    check_finite(next.generator.emf_v, "emf", next.time_s, next.step)?;
    check_finite(
        next.buck.inductor_current_a,
        "inductor_current",
        next.time_s,
        next.step,
    )?;
    check_finite(
        next.supercap.voltage_v,
        "cap_voltage",
        next.time_s,
        next.step,
    )?;
    check_finite(
        next.generator.q_output_var,
        "q_output",
        next.time_s,
        next.step,
    )?;
    Ok(next)
}
