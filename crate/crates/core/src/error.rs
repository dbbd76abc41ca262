//! Error types shared across the simulator.

use thiserror::Error;

/// Top-level error for plant, controller, scenario and I/O failures.
#[derive(Debug, Error)]
pub enum SimError {
    /// A state variable left the finite range during integration.
    #[error("non-finite {quantity} at t = {time_s} s (step {step})")]
    NonFinite {
        quantity: &'static str,
        time_s: f64,
        step: u64,
    },

    /// An open switch saw more than its blocking voltage rating.
    #[error("device overstress: {switch} blocking {volts} V exceeds rating {rating} V at t = {time_s} s")]
    Overstress {
        switch: &'static str,
        volts: f64,
        rating: f64,
        time_s: f64,
    },

    /// A metric is already at or above its limit before charging begins.
    #[error("infeasible limits: {metric} = {value} at start, limit {limit}")]
    InfeasibleLimits {
        metric: &'static str,
        value: f64,
        limit: f64,
    },

    /// The attenuation iteration failed to settle below the limit.
    #[error("attenuation did not converge after {count} iterations (cap {cap})")]
    NonConvergence { count: u32, cap: u32 },

    /// The requested operating point cannot be met by the configured plant.
    #[error(
        "calibration failed: {reason} (achieved P = {achieved_p_w} W, Q = {achieved_q_var} var)"
    )]
    Calibration {
        reason: String,
        achieved_p_w: f64,
        achieved_q_var: f64,
    },

    /// Supercapacitor voltage stopped making progress before reaching target.
    #[error("charge stalled: no capacitor-voltage progress for {window_s} s at t = {time_s} s")]
    Stalled { window_s: f64, time_s: f64 },

    /// Division by a zero impedance in one of the closed-form relations.
    #[error("zero denominator in {relation}")]
    ZeroDenominator { relation: &'static str },

    /// Invalid argument outside a closed-form relation's domain.
    #[error("domain error in {relation}: {reason}")]
    Domain {
        relation: &'static str,
        reason: &'static str,
    },

    /// Configuration file or parameter validation failure.
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Errors raised while parsing or validating a scenario configuration.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("line {line}: invalid value for `{key}`: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        reason: String,
    },

    #[error("`{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, SimError>;
