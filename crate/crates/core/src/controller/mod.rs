//! Disturbance-metric charging controller.
//!
//! Two metrics are watched in real time: `M1 = |V_bus,lim - V_bus|`, the
//! bus-voltage deviation, and `M2 = Q_MTG`, the generator reactive output.
//! A run drives exactly one of two procedures:
//!
//! * M1 mode probes the charging current upward, suspends when the
//!   deviation reaches the alert value, records the current at that
//!   instant, and then tracks that fixed current until the bank is full.
//! * M2 mode probes likewise but, because the reactive response lags the
//!   current, monitors the metric after each suspension; every limit
//!   excursion shrinks the recorded maximum by the attenuation factor
//!   before probing resumes. Once a suspension passes clean, the reference
//!   oscillates inside the hysteresis band between `band_coefficient *
//!   i_max` and `i_max` until the bank is full.

pub mod tracker;

use crate::error::{Result, SimError};
use crate::plant::MetricSample;
use crate::switchgear::GateCmd;
use tracker::CurrentTracker;

/// Metric selection for a run; the two procedures are never mixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricMode {
    M1,
    M2,
}

/// Configured limits, alerts and procedure constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    /// Reference bus voltage for the deviation metric, volts.
    pub v_bus_limit_v: f64,
    /// Upper bound on the bus-voltage deviation, volts.
    pub m1_limit_v: f64,
    /// Alert value at which M1-mode charging suspends; strictly inside the limit.
    pub m1_alert_v: f64,
    /// Upper bound on generator reactive power, var.
    pub q_limit_var: f64,
    /// Alert value for M2 mode; strictly inside the limit.
    pub q_alert_var: f64,
    /// Attenuation factor applied to the recorded maximum on each limit excursion.
    pub attenuation: f64,
    /// Ratio of the band lower edge to the recorded maximum.
    pub band_coefficient: f64,
    /// Bank voltage at which charging stops, volts.
    pub target_cap_voltage_v: f64,
    /// Controller invocation period, seconds.
    pub control_period_s: f64,
}

impl Limits {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.m1_alert_v > 0.0 && self.m1_alert_v < self.m1_limit_v) {
            return Err(format!(
                "m1_alert ({}) must lie strictly inside m1_limit ({})",
                self.m1_alert_v, self.m1_limit_v
            ));
        }
        if !(self.q_alert_var > 0.0 && self.q_alert_var < self.q_limit_var) {
            return Err(format!(
                "q_alert ({}) must lie strictly inside q_limit ({})",
                self.q_alert_var, self.q_limit_var
            ));
        }
        if !(self.attenuation > 0.0 && self.attenuation < 1.0) {
            return Err("attenuation must be in (0, 1)".into());
        }
        if !(self.band_coefficient > 0.0 && self.band_coefficient < 1.0) {
            return Err("band_coefficient must be in (0, 1)".into());
        }
        if self.target_cap_voltage_v <= 0.0 || self.control_period_s <= 0.0 {
            return Err("target voltage and control period must be positive".into());
        }
        Ok(())
    }
}

/// Procedure phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    Probing,
    Suspended,
    FixedTracking,
    BandTracking,
    Done,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::Probing => "probing",
            Phase::Suspended => "suspended",
            Phase::FixedTracking => "fixed_tracking",
            Phase::BandTracking => "band_tracking",
            Phase::Done => "done",
        }
    }

    pub fn from_name(text: &str) -> Option<Self> {
        Some(match text {
            "idle" => Phase::Idle,
            "probing" => Phase::Probing,
            "suspended" => Phase::Suspended,
            "fixed_tracking" => Phase::FixedTracking,
            "band_tracking" => Phase::BandTracking,
            "done" => Phase::Done,
            _ => None?,
        })
    }
}

/// Controller output for one period: gate enable plus current reference.
/// An open gate always carries a zero reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeCommand {
    pub gate_s1: GateCmd,
    pub current_reference_a: f64,
}

impl ChargeCommand {
    fn open() -> Self {
        Self {
            gate_s1: GateCmd::Open,
            current_reference_a: 0.0,
        }
    }

    fn closed(reference_a: f64) -> Self {
        Self {
            gate_s1: GateCmd::Closed,
            current_reference_a: reference_a,
        }
    }
}

/// Procedure state carried between control periods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub phase: Phase,
    /// Charging current captured at the most recent suspension, amps.
    pub i_max_recorded_a: Option<f64>,
    /// Band lower edge, `band_coefficient * i_max_recorded`, amps.
    pub i_lower_a: f64,
    /// Present current reference, amps.
    pub tracking_ref_a: f64,
    /// Number of attenuation iterations applied so far.
    pub attenuation_count: u32,
    /// Time the present suspension began, seconds.
    suspended_since_s: f64,
    /// Band leg: true while heading for the upper edge.
    band_high_leg: bool,
    /// Set once the reference first reaches the upper edge; before that the
    /// reference ramps in rather than stepping.
    band_engaged: bool,
}

impl ControllerState {
    fn idle() -> Self {
        Self {
            phase: Phase::Idle,
            i_max_recorded_a: None,
            i_lower_a: 0.0,
            tracking_ref_a: 0.0,
            attenuation_count: 0,
            suspended_since_s: 0.0,
            band_high_leg: true,
            band_engaged: false,
        }
    }
}

/// Tunables beyond the limits themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmcConfig {
    pub mode: MetricMode,
    pub limits: Limits,
    /// Probing slew rate, amps per second.
    pub probe_slew_a_per_s: f64,
    /// Dwell after an M1 suspension before fixed tracking engages, seconds.
    pub suspend_dwell_s: f64,
    /// Post-suspension monitoring window in M2 mode, seconds.
    pub monitor_window_s: f64,
    /// Abort threshold for the attenuation iteration.
    pub max_attenuations: u32,
    /// Relative tolerance for "measured current reached a band edge".
    /// Plays the role of the switching ripple that makes a real current
    /// cross the edge; the tracked average converges from inside the band.
    pub band_touch_tol: f64,
    /// Current-tracker PI gains.
    pub tracker_kp: f64,
    pub tracker_ki: f64,
}

/// Deviation and reactive metrics for one sample.
pub fn compute_metrics(sample: &MetricSample, limits: &Limits) -> (f64, f64) {
    (
        (limits.v_bus_limit_v - sample.v_bus_v).abs(),
        sample.q_mtg_var,
    )
}

/// Linear reference ramp used while probing, capped at the recorded maximum.
pub fn probe_ramp(tracking_ref_a: f64, cap_a: Option<f64>, slew_a_per_s: f64, dt_s: f64) -> f64 {
    let next = tracking_ref_a + slew_a_per_s * dt_s;
    match cap_a {
        Some(cap) => next.min(cap),
        None => next,
    }
}

/// The disturbance-metric controller: a pure step function over
/// `(state, sample)` plus the PI tracker that realizes its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmcController {
    pub cfg: DmcConfig,
    pub state: ControllerState,
    pub tracker: CurrentTracker,
}

impl DmcController {
    pub fn new(cfg: DmcConfig) -> Self {
        Self {
            cfg,
            state: ControllerState::idle(),
            tracker: CurrentTracker::new(cfg.tracker_kp, cfg.tracker_ki),
        }
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn done(&self) -> bool {
        self.state.phase == Phase::Done
    }

    /// One control period. Deterministic in `(state, sample, limits)`.
    pub fn step(&mut self, sample: &MetricSample) -> Result<ChargeCommand> {
        match self.cfg.mode {
            MetricMode::M1 => self.m1_step(sample),
            MetricMode::M2 => self.m2_step(sample),
        }
    }

    /// Converts the latest command into buck duty via the PI tracker.
    pub fn duty(&mut self, command: &ChargeCommand, sample: &MetricSample) -> f64 {
        match command.gate_s1 {
            GateCmd::Open => {
                self.tracker.reset();
                0.0
            }
            GateCmd::Closed => self.tracker.update(
                command.current_reference_a,
                sample.i_charge_a,
                sample.v_bus_v,
                sample.v_cap_v,
                self.cfg.limits.control_period_s,
            ),
        }
    }

    fn target_reached(&self, sample: &MetricSample) -> bool {
        sample.v_cap_v >= self.cfg.limits.target_cap_voltage_v
    }

    fn finish(&mut self) -> ChargeCommand {
        self.state.phase = Phase::Done;
        self.state.tracking_ref_a = 0.0;
        ChargeCommand::open()
    }

    fn suspend(&mut self, sample: &MetricSample, record: bool) -> ChargeCommand {
        if record {
            self.state.i_max_recorded_a = Some(match self.state.i_max_recorded_a {
                // The capture never grows across iterations.
                Some(prev) => sample.i_charge_a.min(prev),
                None => sample.i_charge_a,
            });
        }
        self.state.phase = Phase::Suspended;
        self.state.suspended_since_s = sample.time_s;
        self.state.tracking_ref_a = 0.0;
        ChargeCommand::open()
    }

    fn engage(&mut self, sample: &MetricSample) -> Result<ChargeCommand> {
        if self.target_reached(sample) {
            // Nothing to charge; no command issued.
            return Ok(self.finish());
        }
        let (m1, m2) = compute_metrics(sample, &self.cfg.limits);
        match self.cfg.mode {
            MetricMode::M1 if m1 >= self.cfg.limits.m1_limit_v => Err(SimError::InfeasibleLimits {
                metric: "M1",
                value: m1,
                limit: self.cfg.limits.m1_limit_v,
            }),
            MetricMode::M2 if m2 >= self.cfg.limits.q_limit_var => {
                Err(SimError::InfeasibleLimits {
                    metric: "M2",
                    value: m2,
                    limit: self.cfg.limits.q_limit_var,
                })
            }
            _ => {
                self.state.phase = Phase::Probing;
                self.state.tracking_ref_a = 0.0;
                Ok(ChargeCommand::closed(0.0))
            }
        }
    }

    fn m1_step(&mut self, sample: &MetricSample) -> Result<ChargeCommand> {
        let limits = self.cfg.limits;
        let (m1, _) = compute_metrics(sample, &limits);
        match self.state.phase {
            Phase::Idle => self.engage(sample),
            Phase::Probing => {
                if self.target_reached(sample) {
                    return Ok(self.finish());
                }
                if m1 >= limits.m1_alert_v {
                    // Record the current at suspension; it becomes the
                    // fixed tracking reference.
                    return Ok(self.suspend(sample, true));
                }
                self.state.tracking_ref_a = probe_ramp(
                    self.state.tracking_ref_a,
                    self.state.i_max_recorded_a,
                    self.cfg.probe_slew_a_per_s,
                    limits.control_period_s,
                );
                Ok(ChargeCommand::closed(self.state.tracking_ref_a))
            }
            Phase::Suspended => {
                if self.target_reached(sample) {
                    return Ok(self.finish());
                }
                if sample.time_s - self.state.suspended_since_s >= self.cfg.suspend_dwell_s {
                    self.state.phase = Phase::FixedTracking;
                    self.state.tracking_ref_a = 0.0;
                }
                Ok(ChargeCommand::open())
            }
            Phase::FixedTracking => {
                if self.target_reached(sample) {
                    return Ok(self.finish());
                }
                let cap = self.state.i_max_recorded_a;
                self.state.tracking_ref_a = probe_ramp(
                    self.state.tracking_ref_a,
                    cap,
                    self.cfg.probe_slew_a_per_s,
                    limits.control_period_s,
                );
                Ok(ChargeCommand::closed(self.state.tracking_ref_a))
            }
            Phase::BandTracking => unreachable!("band tracking is an M2 phase"),
            Phase::Done => Ok(ChargeCommand::open()),
        }
    }

    fn m2_step(&mut self, sample: &MetricSample) -> Result<ChargeCommand> {
        let limits = self.cfg.limits;
        let (_, m2) = compute_metrics(sample, &limits);
        match self.state.phase {
            Phase::Idle => self.engage(sample),
            Phase::Probing => {
                if self.target_reached(sample) {
                    return Ok(self.finish());
                }
                if m2 >= limits.q_alert_var {
                    return Ok(self.suspend(sample, true));
                }
                // A re-probe that reaches the revised maximum suspends again
                // to monitor the metric at that level.
                if let Some(cap) = self.state.i_max_recorded_a {
                    if self.state.tracking_ref_a >= cap && sample.i_charge_a >= 0.995 * cap {
                        return Ok(self.suspend(sample, false));
                    }
                }
                self.state.tracking_ref_a = probe_ramp(
                    self.state.tracking_ref_a,
                    self.state.i_max_recorded_a,
                    self.cfg.probe_slew_a_per_s,
                    limits.control_period_s,
                );
                Ok(ChargeCommand::closed(self.state.tracking_ref_a))
            }
            Phase::Suspended => {
                if self.target_reached(sample) {
                    return Ok(self.finish());
                }
                if m2 > limits.q_limit_var {
                    // Limit excursion while suspended: shrink the recorded
                    // maximum and probe again from zero.
                    let i_max = self
                        .state
                        .i_max_recorded_a
                        .expect("suspension always follows a capture");
                    self.state.i_max_recorded_a = Some(limits.attenuation * i_max);
                    self.state.attenuation_count += 1;
                    if self.state.attenuation_count > self.cfg.max_attenuations {
                        return Err(SimError::NonConvergence {
                            count: self.state.attenuation_count,
                            cap: self.cfg.max_attenuations,
                        });
                    }
                    self.state.phase = Phase::Probing;
                    self.state.tracking_ref_a = 0.0;
                    return Ok(ChargeCommand::closed(0.0));
                }
                if sample.time_s - self.state.suspended_since_s >= self.cfg.monitor_window_s {
                    // Clean monitoring window: freeze the band.
                    let i_max = self
                        .state
                        .i_max_recorded_a
                        .expect("suspension always follows a capture");
                    self.state.i_lower_a = limits.band_coefficient * i_max;
                    self.state.phase = Phase::BandTracking;
                    self.state.band_high_leg = true;
                    self.state.band_engaged = false;
                    self.state.tracking_ref_a = 0.0;
                }
                Ok(ChargeCommand::open())
            }
            Phase::BandTracking => {
                if self.target_reached(sample) {
                    return Ok(self.finish());
                }
                let i_max = self
                    .state
                    .i_max_recorded_a
                    .expect("band tracking always follows a capture");
                if !self.state.band_engaged {
                    // First approach ramps in so band entry does not
                    // re-inject the disturbance being measured.
                    let delta = self.cfg.probe_slew_a_per_s * limits.control_period_s;
                    self.state.tracking_ref_a = (self.state.tracking_ref_a + delta).min(i_max);
                    if self.state.tracking_ref_a >= i_max {
                        self.state.band_engaged = true;
                        self.state.band_high_leg = true;
                    }
                    return Ok(ChargeCommand::closed(self.state.tracking_ref_a));
                }
                // Hysteresis toggling on the measured charging current; the
                // touch tolerance stands in for switching ripple, which is
                // what crosses the edge in a real converter.
                let tol = self.cfg.band_touch_tol;
                if self.state.band_high_leg && sample.i_charge_a >= i_max * (1.0 - tol) {
                    self.state.band_high_leg = false;
                } else if !self.state.band_high_leg
                    && sample.i_charge_a <= self.state.i_lower_a * (1.0 + tol)
                {
                    self.state.band_high_leg = true;
                }
                // The reference switches straight between the two edges.
                self.state.tracking_ref_a = if self.state.band_high_leg {
                    i_max
                } else {
                    self.state.i_lower_a
                };
                Ok(ChargeCommand::closed(self.state.tracking_ref_a))
            }
            Phase::FixedTracking => unreachable!("fixed tracking is an M1 phase"),
            Phase::Done => Ok(ChargeCommand::open()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn limits() -> Limits {
        Limits {
            v_bus_limit_v: 5000.0,
            m1_limit_v: 800.0,
            m1_alert_v: 760.0,
            q_limit_var: 10e6,
            q_alert_var: 9.5e6,
            attenuation: 0.95,
            band_coefficient: 0.9,
            target_cap_voltage_v: 4000.0,
            control_period_s: 50e-6,
        }
    }

    fn cfg(mode: MetricMode) -> DmcConfig {
        DmcConfig {
            mode,
            limits: limits(),
            probe_slew_a_per_s: 5000.0,
            suspend_dwell_s: 0.5,
            monitor_window_s: 2.0,
            max_attenuations: 50,
            band_touch_tol: 0.002,
            tracker_kp: 2e-6,
            tracker_ki: 2e-4,
        }
    }

    fn sample(time_s: f64, v_bus: f64, q: f64, i: f64, v_cap: f64) -> MetricSample {
        MetricSample {
            time_s,
            v_bus_v: v_bus,
            q_mtg_var: q,
            i_charge_a: i,
            v_cap_v: v_cap,
            stored_energy_j: 0.5 * 37.5 * v_cap * v_cap,
        }
    }

    #[test]
    fn metrics_follow_their_definitions() {
        let l = limits();
        let s = sample(0.0, 5000.0, 3e6, 0.0, 0.0);
        assert_eq!(compute_metrics(&s, &l), (0.0, 3e6));

        let s = sample(0.0, 4201.0, 9.58e6, 0.0, 0.0);
        let (m1, m2) = compute_metrics(&s, &l);
        assert_eq!(m1, 799.0);
        assert!(m1 < l.m1_limit_v);
        assert_eq!(m2, 9.58e6);
    }

    #[test]
    fn probe_ramp_is_linear_and_capped() {
        assert_eq!(probe_ramp(1000.0, None, 5000.0, 1e-4), 1000.5);
        assert_eq!(probe_ramp(4300.0, Some(4300.0), 5000.0, 1e-4), 4300.0);
        assert_eq!(probe_ramp(0.0, None, 5000.0, 0.0), 0.0);
    }

    #[test]
    fn m1_captures_current_at_alert() {
        let mut c = DmcController::new(cfg(MetricMode::M1));
        c.step(&sample(0.0, 5000.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(c.phase(), Phase::Probing);

        // Deviation reaches the alert while charging at 4.3 kA.
        let cmd = c
            .step(&sample(0.1, 5000.0 - 761.0, 0.0, 4300.0, 100.0))
            .unwrap();
        assert_eq!(c.phase(), Phase::Suspended);
        assert_eq!(c.state.i_max_recorded_a, Some(4300.0));
        assert_eq!(cmd.gate_s1, GateCmd::Open);
        assert_eq!(cmd.current_reference_a, 0.0);
    }

    #[test]
    fn m1_tracks_then_finishes_at_target_voltage() {
        let mut c = DmcController::new(cfg(MetricMode::M1));
        c.state.phase = Phase::FixedTracking;
        c.state.i_max_recorded_a = Some(4300.0);

        let cmd = c.step(&sample(1.0, 4300.0, 0.0, 4250.0, 3000.0)).unwrap();
        assert_eq!(cmd.gate_s1, GateCmd::Closed);
        assert!(cmd.current_reference_a <= 4300.0);

        let cmd = c.step(&sample(1.1, 4300.0, 0.0, 4300.0, 4000.0)).unwrap();
        assert_eq!(c.phase(), Phase::Done);
        assert_eq!(cmd.gate_s1, GateCmd::Open);
    }

    #[test]
    fn already_charged_bank_goes_straight_to_done() {
        let mut c = DmcController::new(cfg(MetricMode::M1));
        let cmd = c.step(&sample(0.0, 5000.0, 0.0, 0.0, 4000.0)).unwrap();
        assert_eq!(c.phase(), Phase::Done);
        assert_eq!(cmd.gate_s1, GateCmd::Open);
        assert_eq!(cmd.current_reference_a, 0.0);
    }

    #[test]
    fn metric_above_limit_at_start_is_infeasible() {
        let mut c = DmcController::new(cfg(MetricMode::M1));
        let err = c.step(&sample(0.0, 4100.0, 0.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(
            err,
            SimError::InfeasibleLimits { metric: "M1", .. }
        ));

        let mut c = DmcController::new(cfg(MetricMode::M2));
        let err = c.step(&sample(0.0, 5000.0, 11e6, 0.0, 0.0)).unwrap_err();
        assert!(matches!(
            err,
            SimError::InfeasibleLimits { metric: "M2", .. }
        ));
    }

    #[test]
    fn m2_clean_monitor_window_freezes_band() {
        let mut c = DmcController::new(cfg(MetricMode::M2));
        c.step(&sample(0.0, 5000.0, 5e6, 0.0, 0.0)).unwrap();

        // Reactive metric reaches the alert at 3.3 kA: suspend and record.
        c.step(&sample(1.0, 4800.0, 9.5e6, 3300.0, 200.0)).unwrap();
        assert_eq!(c.phase(), Phase::Suspended);
        assert_eq!(c.state.i_max_recorded_a, Some(3300.0));

        // Peak during monitoring stays below the limit (9.641 < 10 Mvar).
        c.step(&sample(1.5, 4900.0, 9.641e6, 0.0, 200.0)).unwrap();
        assert_eq!(c.phase(), Phase::Suspended);

        // Window expires clean: band = [2.97, 3.3] kA.
        c.step(&sample(3.01, 5000.0, 5e6, 0.0, 200.0)).unwrap();
        assert_eq!(c.phase(), Phase::BandTracking);
        assert_eq!(c.state.i_lower_a, 0.9 * 3300.0);
        assert_eq!(c.state.i_lower_a, 2970.0);
    }

    #[test]
    fn m2_limit_excursion_attenuates_and_reprobes() {
        let mut c = DmcController::new(cfg(MetricMode::M2));
        c.step(&sample(0.0, 5000.0, 5e6, 0.0, 0.0)).unwrap();
        c.step(&sample(1.0, 4800.0, 9.5e6, 3300.0, 200.0)).unwrap();

        // Metric keeps rising past the limit while suspended.
        c.step(&sample(1.2, 4800.0, 10.1e6, 0.0, 200.0)).unwrap();
        assert_eq!(c.phase(), Phase::Probing);
        assert_eq!(c.state.attenuation_count, 1);
        let revised = c.state.i_max_recorded_a.unwrap();
        assert_eq!(revised, 0.95 * 3300.0);
        assert_eq!(revised, 3135.0);

        // Re-probe reaches the revised maximum: suspend again, no re-record.
        c.state.tracking_ref_a = revised;
        c.step(&sample(2.0, 4850.0, 9.0e6, revised, 300.0)).unwrap();
        assert_eq!(c.phase(), Phase::Suspended);
        assert_eq!(c.state.i_max_recorded_a, Some(revised));

        // Clean window now: band ratio must still be the coefficient exactly.
        c.step(&sample(4.01, 5000.0, 5e6, 0.0, 300.0)).unwrap();
        assert_eq!(c.phase(), Phase::BandTracking);
        assert_eq!(c.state.i_lower_a / revised, 0.9);
    }

    #[test]
    fn m2_attenuation_cap_aborts() {
        let mut cfg = cfg(MetricMode::M2);
        cfg.max_attenuations = 2;
        let mut c = DmcController::new(cfg);
        c.step(&sample(0.0, 5000.0, 5e6, 0.0, 0.0)).unwrap();
        c.step(&sample(1.0, 4800.0, 9.5e6, 3300.0, 200.0)).unwrap();

        let mut t = 1.2;
        let err = loop {
            // Every suspension sees a limit excursion: never converges.
            match c.step(&sample(t, 4800.0, 10.5e6, 0.0, 200.0)) {
                Ok(_) => {
                    // Forced back to probing; jump straight to the cap again.
                    let cap = c.state.i_max_recorded_a.unwrap();
                    c.state.tracking_ref_a = cap;
                    t += 0.1;
                    c.step(&sample(t, 4800.0, 9.0e6, cap, 200.0)).unwrap();
                    t += 0.1;
                }
                Err(e) => break e,
            }
        };
        assert!(matches!(err, SimError::NonConvergence { .. }));
    }

    #[test]
    fn band_reference_toggles_between_edges() {
        let mut c = DmcController::new(cfg(MetricMode::M2));
        c.state.phase = Phase::BandTracking;
        c.state.i_max_recorded_a = Some(3300.0);
        c.state.i_lower_a = 2970.0;
        c.state.tracking_ref_a = 3300.0;
        c.state.band_engaged = true;

        // Hitting the upper edge sends the reference to the lower edge.
        let cmd = c.step(&sample(1.0, 4800.0, 9e6, 3300.0, 500.0)).unwrap();
        assert!(!c.state.band_high_leg);
        assert_eq!(cmd.current_reference_a, 2970.0);
        // Falling to the lower edge sends it back up.
        let cmd = c.step(&sample(1.1, 4800.0, 9e6, 2969.0, 500.0)).unwrap();
        assert!(c.state.band_high_leg);
        assert_eq!(cmd.current_reference_a, 3300.0);
    }

    #[test]
    fn replay_reproduces_commands_exactly() {
        let stream: Vec<MetricSample> = (0..2000)
            .map(|k| {
                let t = k as f64 * 50e-6;
                sample(t, 5000.0 - 400.0 * t, 5e6 + 1e6 * t, 1000.0 * t, 100.0 * t)
            })
            .collect();

        let run = |stream: &[MetricSample]| -> Vec<ChargeCommand> {
            let mut c = DmcController::new(cfg(MetricMode::M1));
            stream.iter().map(|s| c.step(s).unwrap()).collect()
        };
        assert_eq!(run(&stream), run(&stream));
    }
}
