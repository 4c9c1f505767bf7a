//! Trace CSV files and run summaries.

use std::path::Path;

use cerg_core::sim::{detect_phases, steady_state_metrics};
use cerg_core::{ControlMode, PlantModel, Scenario, TraceLog};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::plant::Plant;

pub const CSV_HEADER: [&str; 18] = [
    "t", "q1", "q2", "qd1", "qd2", "v1", "v2", "u1", "u2", "V", "s", "dsm_h", "dsm_s", "dsm_e", "dsm", "fx", "fy",
    "phase",
];

pub const SIG_DIGITS: usize = 9;

/// Tolerance on `min(s, V - E_max)` when counting OR-constraint violations.
pub const OR_TOLERANCE: f64 = 1e-6;

/// Formats `x` with [`SIG_DIGITS`] significant digits, dropping trailing
/// zeros. Magnitudes outside `[1e-5, 1e9)` use exponent notation.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent formatting");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..SIG_DIGITS as i32).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_trace_csv(path: &Path, trace: &TraceLog<2>) -> Result<()> {
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    let mut row: Vec<String> = Vec::with_capacity(CSV_HEADER.len());
    for r in &trace.records {
        row.clear();
        let m = &r.margin;
        let values = [
            r.t, r.q[0], r.q[1], r.qd[0], r.qd[1], r.v[0], r.v[1], r.u[0], r.u[1], r.energy, r.soft, m.hard, m.soft,
            m.energy, m.applied, r.force[0], r.force[1],
        ];
        row.extend(values.iter().map(|&x| format_sig(x)));
        row.push(r.phase.as_str().to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseEntry {
    pub phase: String,
    pub t: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteadyState {
    pub window: f64,
    pub v_final: [f64; 2],
    pub q_final: [f64; 2],
    /// End-effector position at the final step.
    pub p_final: [f64; 2],
    pub force_mean: f64,
    pub energy_mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    /// `governed` or `baseline`.
    pub mode: String,
    /// `joint` or `task`.
    pub controller: String,
    pub samples: usize,
    pub t_end: f64,
    pub error: Option<String>,
    pub phases: Vec<PhaseEntry>,
    pub first_contact_time: Option<f64>,
    pub peak_force: f64,
    pub or_violations: usize,
    pub worst_or_residual: f64,
    /// Absent when the trace is shorter than the averaging window.
    pub steady_state: Option<SteadyState>,
}

impl RunSummary {
    /// Short label such as `governed-task`.
    pub fn label(&self) -> String {
        format!("{}-{}", self.mode, self.controller)
    }
}

pub fn controller_name(mode: ControlMode) -> &'static str {
    match mode {
        ControlMode::Joint => "joint",
        ControlMode::Task => "task",
    }
}

pub fn summarize(
    name: &str,
    scenario: &Scenario<Plant, 2>,
    trace: &TraceLog<2>,
    error: Option<&cerg_core::CergError>,
    window: f64,
) -> RunSummary {
    let set = &scenario.constraints;
    let steady_state = steady_state_metrics(trace, window).ok().map(|m| SteadyState {
        window,
        v_final: m.v_final.into(),
        q_final: m.q_final.into(),
        p_final: scenario.plant.forward_kinematics(&m.q_final).into(),
        force_mean: m.force_mean,
        energy_mean: m.energy_mean,
    });
    RunSummary {
        scenario: name.to_string(),
        mode: if scenario.governor_enabled { "governed" } else { "baseline" }.to_string(),
        controller: controller_name(scenario.gains.mode).to_string(),
        samples: trace.len(),
        t_end: trace.last().map_or(0.0, |r| r.t),
        error: error.map(|e| e.to_string()),
        phases: detect_phases(trace, set)
            .into_iter()
            .map(|e| PhaseEntry { phase: e.phase.as_str().to_string(), t: e.t })
            .collect(),
        first_contact_time: trace.first_contact_time(),
        peak_force: trace.peak_force(),
        or_violations: trace.or_violations(set.e_max, OR_TOLERANCE),
        worst_or_residual: trace.worst_or_residual(set.e_max),
        steady_state,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("summary serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}
