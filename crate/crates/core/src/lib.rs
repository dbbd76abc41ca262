//! Deterministic fixed-timestep simulator of an MVDC shipboard power system
//! charging a supercapacitor energy-storage bank, together with the
//! disturbance-metric controller that keeps bus-voltage sag and generator
//! reactive power inside configured limits while charging.
//!
//! The crate is organized around five pieces:
//!
//! * [`plant`] — the electrical model (generator, rectifier, DC network,
//!   buck charger, supercapacitor) advanced at a fixed step, plus the
//!   closed-form steady/transient relations used as test oracles;
//! * [`switchgear`] — the fast IGBT gates with turn-off delay, blocking
//!   rating and the S1/S2 interlock;
//! * [`controller`] — the two disturbance-metric charging procedures;
//! * [`scenario`] — operating-point calibration, the closed simulation
//!   loop, and per-run summaries;
//! * [`config`] / [`telemetry`] — the flat `key = value` configuration
//!   format and the CSV telemetry/summary files.

pub mod config;
pub mod controller;
pub mod error;
pub mod plant;
pub mod scenario;
pub mod switchgear;
pub mod telemetry;

pub use error::{ConfigError, Result, SimError};
