//! Flat `key = value` scenario configuration.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. All
//! quantities are SI with the unit in the key name. Unknown keys are
//! errors, so typos fail loudly. `resolved_dump` emits every key with its
//! effective value; the emitted text is itself a valid configuration.

use std::fs;
use std::path::Path;

use crate::controller::MetricMode;
use crate::error::{ConfigError, Result, SimError};
use crate::plant::network::BusMode;
use crate::plant::Integrator;
use crate::scenario::ScenarioConfig;

/// Parses configuration text into a scenario, starting from defaults.
pub fn parse_config(text: &str) -> std::result::Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Malformed {
                line,
                text: content.to_string(),
            })?;
        apply_key(&mut cfg, key.trim(), value.trim(), line)?;
    }
    Ok(cfg)
}

/// Reads and parses a configuration file.
pub fn parse_config_file(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| SimError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(parse_config(&text)?)
}

fn apply_key(
    cfg: &mut ScenarioConfig,
    key: &str,
    value: &str,
    line: usize,
) -> std::result::Result<(), ConfigError> {
    let bad = |reason: &str| ConfigError::InvalidValue {
        line,
        key: key.to_string(),
        reason: reason.to_string(),
    };
    let num = || -> std::result::Result<f64, ConfigError> {
        value.parse::<f64>().map_err(|_| bad("expected a number"))
    };
    let int = || -> std::result::Result<u32, ConfigError> {
        value.parse::<u32>().map_err(|_| bad("expected an integer"))
    };

    match key {
        "label" => cfg.label = value.to_string(),
        "mode" => {
            cfg.mode = match value {
                "ring" => BusMode::RingMode,
                "split" => BusMode::SplitPlantMode,
                _ => return Err(bad("expected `ring` or `split`")),
            }
        }
        "controller_mode" => {
            cfg.controller_mode = match value {
                "m1" => MetricMode::M1,
                "m2" => MetricMode::M2,
                _ => return Err(bad("expected `m1` or `m2`")),
            }
        }
        "integrator" => {
            cfg.integrator = match value {
                "euler" => Integrator::Euler,
                "heun" => Integrator::Heun,
                _ => return Err(bad("expected `euler` or `heun`")),
            }
        }
        "initial_p_w" => cfg.initial_p_w = num()?,
        "initial_q_var" => cfg.initial_q_var = num()?,
        "charge_start_s" => cfg.charge_start_s = num()?,
        "sim_duration_s" => cfg.sim_duration_s = num()?,
        "dt_s" => cfg.dt_s = num()?,
        "decimation" => cfg.decimation = int()?,
        "v_bus_limit_v" => cfg.limits.v_bus_limit_v = num()?,
        "m1_limit_v" => cfg.limits.m1_limit_v = num()?,
        "m1_alert_v" => cfg.limits.m1_alert_v = num()?,
        "q_limit_var" => cfg.limits.q_limit_var = num()?,
        "q_alert_var" => cfg.limits.q_alert_var = num()?,
        "attenuation" => cfg.limits.attenuation = num()?,
        "band_coefficient" => cfg.limits.band_coefficient = num()?,
        "target_cap_voltage_v" => cfg.limits.target_cap_voltage_v = num()?,
        "control_period_s" => cfg.limits.control_period_s = num()?,
        "bus_rated_voltage_v" => cfg.bus_rated_voltage_v = num()?,
        "r_line_ohm" => cfg.r_line_ohm = num()?,
        "r_commutation_ohm" => cfg.r_commutation_ohm = num()?,
        "rectifier_gain" => cfg.rectifier_gain = num()?,
        "transient_ratio" => cfg.transient_ratio = num()?,
        "t_exciter_s" => cfg.t_exciter_s = num()?,
        "t_reactance_relax_s" => cfg.t_reactance_relax_s = num()?,
        "emf_ceiling_ratio" => cfg.emf_ceiling_ratio = num()?,
        "rated_mva_per_unit" => cfg.rated_mva_per_unit = num()?,
        "disturbance_threshold" => cfg.disturbance_threshold = num()?,
        "l_filter_h" => cfg.l_filter_h = num()?,
        "r_parasitic_ohm" => cfg.r_parasitic_ohm = num()?,
        "capacitance_f" => cfg.capacitance_f = num()?,
        "probe_slew_a_per_s" => cfg.probe_slew_a_per_s = num()?,
        "suspend_dwell_s" => cfg.suspend_dwell_s = num()?,
        "monitor_window_s" => cfg.monitor_window_s = num()?,
        "grace_window_s" => cfg.grace_window_s = num()?,
        "max_attenuations" => cfg.max_attenuations = int()?,
        "band_touch_tol" => cfg.band_touch_tol = num()?,
        "watchdog_window_s" => cfg.watchdog_window_s = num()?,
        "tracker_kp" => cfg.tracker_kp = num()?,
        "tracker_ki" => cfg.tracker_ki = num()?,
        _ => {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            })
        }
    }
    Ok(())
}

fn mode_str(mode: BusMode) -> &'static str {
    match mode {
        BusMode::RingMode => "ring",
        BusMode::SplitPlantMode => "split",
    }
}

fn controller_str(mode: MetricMode) -> &'static str {
    match mode {
        MetricMode::M1 => "m1",
        MetricMode::M2 => "m2",
    }
}

fn integrator_str(i: Integrator) -> &'static str {
    match i {
        Integrator::Euler => "euler",
        Integrator::Heun => "heun",
    }
}

/// Emits the fully-resolved configuration; parseable by [`parse_config`].
pub fn resolved_dump(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    s.push_str("# resolved scenario configuration\n");
    s.push_str(&format!("label = {}\n", cfg.label));
    s.push_str(&format!("mode = {}\n", mode_str(cfg.mode)));
    s.push_str(&format!(
        "controller_mode = {}\n",
        controller_str(cfg.controller_mode)
    ));
    s.push_str(&format!(
        "integrator = {}\n",
        integrator_str(cfg.integrator)
    ));
    s.push_str(&format!("initial_p_w = {}\n", cfg.initial_p_w));
    s.push_str(&format!("initial_q_var = {}\n", cfg.initial_q_var));
    s.push_str(&format!("charge_start_s = {}\n", cfg.charge_start_s));
    s.push_str(&format!("sim_duration_s = {}\n", cfg.sim_duration_s));
    s.push_str(&format!("dt_s = {}\n", cfg.dt_s));
    s.push_str(&format!("decimation = {}\n", cfg.decimation));
    s.push_str(&format!("v_bus_limit_v = {}\n", cfg.limits.v_bus_limit_v));
    s.push_str(&format!("m1_limit_v = {}\n", cfg.limits.m1_limit_v));
    s.push_str(&format!("m1_alert_v = {}\n", cfg.limits.m1_alert_v));
    s.push_str(&format!("q_limit_var = {}\n", cfg.limits.q_limit_var));
    s.push_str(&format!("q_alert_var = {}\n", cfg.limits.q_alert_var));
    s.push_str(&format!("attenuation = {}\n", cfg.limits.attenuation));
    s.push_str(&format!(
        "band_coefficient = {}\n",
        cfg.limits.band_coefficient
    ));
    s.push_str(&format!(
        "target_cap_voltage_v = {}\n",
        cfg.limits.target_cap_voltage_v
    ));
    s.push_str(&format!(
        "control_period_s = {}\n",
        cfg.limits.control_period_s
    ));
    s.push_str(&format!(
        "bus_rated_voltage_v = {}\n",
        cfg.bus_rated_voltage_v
    ));
    s.push_str(&format!("r_line_ohm = {}\n", cfg.r_line_ohm));
    s.push_str(&format!("r_commutation_ohm = {}\n", cfg.r_commutation_ohm));
    s.push_str(&format!("rectifier_gain = {}\n", cfg.rectifier_gain));
    s.push_str(&format!("transient_ratio = {}\n", cfg.transient_ratio));
    s.push_str(&format!("t_exciter_s = {}\n", cfg.t_exciter_s));
    s.push_str(&format!(
        "t_reactance_relax_s = {}\n",
        cfg.t_reactance_relax_s
    ));
    s.push_str(&format!("emf_ceiling_ratio = {}\n", cfg.emf_ceiling_ratio));
    s.push_str(&format!(
        "rated_mva_per_unit = {}\n",
        cfg.rated_mva_per_unit
    ));
    s.push_str(&format!(
        "disturbance_threshold = {}\n",
        cfg.disturbance_threshold
    ));
    s.push_str(&format!("l_filter_h = {}\n", cfg.l_filter_h));
    s.push_str(&format!("r_parasitic_ohm = {}\n", cfg.r_parasitic_ohm));
    s.push_str(&format!("capacitance_f = {}\n", cfg.capacitance_f));
    s.push_str(&format!(
        "probe_slew_a_per_s = {}\n",
        cfg.probe_slew_a_per_s
    ));
    s.push_str(&format!("suspend_dwell_s = {}\n", cfg.suspend_dwell_s));
    s.push_str(&format!("monitor_window_s = {}\n", cfg.monitor_window_s));
    s.push_str(&format!("grace_window_s = {}\n", cfg.grace_window_s));
    s.push_str(&format!("max_attenuations = {}\n", cfg.max_attenuations));
    s.push_str(&format!("band_touch_tol = {}\n", cfg.band_touch_tol));
    s.push_str(&format!("watchdog_window_s = {}\n", cfg.watchdog_window_s));
    s.push_str(&format!("tracker_kp = {}\n", cfg.tracker_kp));
    s.push_str(&format!("tracker_ki = {}\n", cfg.tracker_ki));
    s
}
