//! Telemetry records, the CSV time-series format, and summary rows.
//!
//! Serialization uses Rust's shortest-roundtrip float formatting with a
//! point separator, so files are locale-independent and parse back to the
//! exact same values.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::controller::Phase;
use crate::error::{Result, SimError};

/// Header of every telemetry file, one column per field in declared order.
pub const TELEMETRY_HEADER: &str =
    "time_s,v_bus_V,q_mtg_var,i_charge_A,v_cap_V,energy_J,phase,duty,reference_A";

/// One recorded step of the closed loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetryRecord {
    pub time_s: f64,
    pub v_bus_v: f64,
    pub q_mtg_var: f64,
    pub i_charge_a: f64,
    pub v_cap_v: f64,
    pub energy_j: f64,
    pub phase: Phase,
    pub duty: f64,
    pub reference_a: f64,
    /// Attenuation iterations applied so far; kept in memory, not persisted.
    pub attenuation_count: u32,
}

/// Per-run aggregate mirroring one row of the result table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub test_setting: String,
    pub max_metric: f64,
    pub min_metric: f64,
    pub avg_metric: f64,
    /// Charging current: equal low/high for a fixed reference, a band otherwise.
    pub current_low_a: f64,
    pub current_high_a: f64,
    pub charging_time_s: Option<f64>,
    /// True when the charging window contained no records.
    pub empty: bool,
}

impl SummaryRow {
    pub fn empty(label: &str) -> Self {
        Self {
            test_setting: label.to_string(),
            max_metric: 0.0,
            min_metric: 0.0,
            avg_metric: 0.0,
            current_low_a: 0.0,
            current_high_a: 0.0,
            charging_time_s: None,
            empty: true,
        }
    }

    /// True when the run tracked one fixed current rather than a band.
    pub fn is_fixed_current(&self) -> bool {
        self.current_low_a == self.current_high_a
    }
}

fn io_err(path: &Path, source: std::io::Error) -> SimError {
    SimError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes the time series as CSV. On failure the partial file is removed.
pub fn write_telemetry(records: &[TelemetryRecord], path: &Path) -> Result<()> {
    let result = (|| -> std::io::Result<()> {
        let file = fs::File::create(path)?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{TELEMETRY_HEADER}")?;
        for r in records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.time_s,
                r.v_bus_v,
                r.q_mtg_var,
                r.i_charge_a,
                r.v_cap_v,
                r.energy_j,
                r.phase.as_str(),
                r.duty,
                r.reference_a
            )?;
        }
        w.flush()
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(path);
        return Err(io_err(path, e));
    }
    Ok(())
}

/// Reads a telemetry CSV back into records.
pub fn read_telemetry(path: &Path) -> Result<Vec<TelemetryRecord>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != TELEMETRY_HEADER {
        return Err(SimError::Config(crate::error::ConfigError::Invalid {
            key: "telemetry",
            reason: format!("unexpected header `{header}`"),
        }));
    }

    let mut records = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(SimError::Config(crate::error::ConfigError::Invalid {
                key: "telemetry",
                reason: format!("row {}: expected 9 fields, got {}", n + 2, fields.len()),
            }));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i].parse().map_err(|_| {
                SimError::Config(crate::error::ConfigError::Invalid {
                    key: "telemetry",
                    reason: format!("row {}: bad number `{}`", n + 2, fields[i]),
                })
            })
        };
        let phase = Phase::from_name(fields[6]).ok_or_else(|| {
            SimError::Config(crate::error::ConfigError::Invalid {
                key: "telemetry",
                reason: format!("row {}: unknown phase `{}`", n + 2, fields[6]),
            })
        })?;
        records.push(TelemetryRecord {
            time_s: num(0)?,
            v_bus_v: num(1)?,
            q_mtg_var: num(2)?,
            i_charge_a: num(3)?,
            v_cap_v: num(4)?,
            energy_j: num(5)?,
            phase,
            duty: num(7)?,
            reference_a: num(8)?,
            attenuation_count: 0,
        });
    }
    Ok(records)
}

/// Header of the machine-readable summary file.
pub const SUMMARY_HEADER: &str =
    "test_setting,max_metric,min_metric,avg_metric,current_low_A,current_high_A,charging_time_s";

/// Writes one or more summary rows as CSV.
pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut text = String::from(SUMMARY_HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(&summary_csv_line(row));
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn summary_csv_line(row: &SummaryRow) -> String {
    if row.empty {
        return format!("{},,,,,,", row.test_setting);
    }
    format!(
        "{},{},{},{},{},{},{}",
        row.test_setting,
        row.max_metric,
        row.min_metric,
        row.avg_metric,
        row.current_low_a,
        row.current_high_a,
        row.charging_time_s
            .map(|t| t.to_string())
            .unwrap_or_default()
    )
}

/// Renders rows as an aligned plain-text table in the units of the result
/// table: kV for bus-voltage rows, Mvar for reactive rows, kA and seconds.
pub fn format_summary_table(rows: &[SummaryRow]) -> String {
    let mut cells: Vec<[String; 6]> = vec![[
        "test setting".into(),
        "max metric".into(),
        "min metric".into(),
        "avg metric".into(),
        "charging current".into(),
        "charging time".into(),
    ]];
    for row in rows {
        if row.empty {
            cells.push([
                row.test_setting.clone(),
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                "(no charging window)".into(),
            ]);
            continue;
        }
        let m1 = row.test_setting.starts_with("m1");
        let metric = |v: f64| {
            if m1 {
                format!("{:.3} kV", v / 1e3)
            } else {
                format!("{:.2} Mvar", v / 1e6)
            }
        };
        let current = if row.is_fixed_current() {
            format!("{:.2} kA", row.current_high_a / 1e3)
        } else {
            format!(
                "({:.2}, {:.2}) kA",
                row.current_low_a / 1e3,
                row.current_high_a / 1e3
            )
        };
        let time = match row.charging_time_s {
            Some(t) => format!("{t:.2} s"),
            None => "incomplete".into(),
        };
        cells.push([
            row.test_setting.clone(),
            metric(row.max_metric),
            metric(row.min_metric),
            metric(row.avg_metric),
            current,
            time,
        ]);
    }

    let mut widths = [0usize; 6];
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &cells {
        for (i, cell) in row.iter().enumerate() {
            out.push_str(&format!("{:<width$}", cell, width = widths[i] + 2));
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    }
    out
}
