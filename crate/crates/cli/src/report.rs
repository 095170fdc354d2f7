//! `report.json`: run identity, resolved config, plant certificate,
//! tracking windows and the dissipation summary.

use serde::Serialize;

use bcast_core::analysis::{PassivityReport, TrackingMetrics};
use bcast_core::lti::SprCertificate;
use bcast_core::simulator::{tick_at_or_after, SimConfig, SimTrace};

use crate::config::ConfigFile;

pub const SCHEMA_VERSION: u32 = 1;

/// JSON Schema of `report.json`.
pub const REPORT_SCHEMA: &str = include_str!("../schemas/report.schema.json");

#[derive(Debug, Clone, Serialize)]
pub struct RunIdentity {
    /// `preset` or `config`.
    pub source: &'static str,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_path: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowSummary {
    pub t_start: f64,
    pub t_end: f64,
    pub u_r: f64,
    pub shares: Vec<f64>,
    pub faulted: Vec<usize>,
    pub c_vu: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PassivitySummary {
    pub kind: &'static str,
    pub c_u: f64,
    pub max_violation: f64,
    pub tol: f64,
    pub passive: bool,
    pub windows: Vec<WindowSummary>,
    pub equality_residual: Option<f64>,
    pub unsaturated_steps: usize,
    pub quadratic_storage_max_violation: Option<f64>,
}

impl PassivitySummary {
    pub fn new(rep: &PassivityReport, trace: &SimTrace) -> Self {
        let t_of = |k: usize| trace.t[k.min(trace.len() - 1)];
        Self {
            kind: rep.kind.name(),
            c_u: rep.c_u,
            max_violation: rep.max_violation,
            tol: rep.tol,
            passive: rep.passive,
            windows: rep
                .windows
                .iter()
                .map(|w| WindowSummary {
                    t_start: t_of(w.start),
                    t_end: t_of(w.end - 1),
                    u_r: w.u_r,
                    shares: w.shares.clone(),
                    faulted: w.faulted.clone(),
                    c_vu: w.c_vu,
                    max_violation: w.max_violation,
                })
                .collect(),
            equality_residual: rep.equality_residual,
            unsaturated_steps: rep.unsaturated_steps,
            quadratic_storage_max_violation: rep.quadratic_storage_max_violation,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FaultCheck {
    pub t: f64,
    pub agents: Vec<usize>,
    /// Every listed agent output exactly 0 from the fault tick on.
    pub outputs_zero: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub run: RunIdentity,
    pub config: ConfigFile,
    pub spr: SprCertificate,
    pub rows: usize,
    pub tracking: Vec<TrackingMetrics>,
    pub passivity: Option<PassivitySummary>,
    pub fault_checks: Vec<FaultCheck>,
    pub flags: Vec<String>,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Last quarter of every reference segment, e.g. `[0.15, 0.2]` and
/// `[0.35, 0.4]` for a two-segment 0.4 s run.
pub fn tracking_windows(config: &SimConfig) -> Vec<(f64, f64)> {
    let segs = config.reference.segments();
    segs.iter()
        .enumerate()
        .filter_map(|(j, s)| {
            let end = segs.get(j + 1).map_or(config.t_end, |n| n.t_start).min(config.t_end);
            (end > s.t_start).then_some((end - 0.25 * (end - s.t_start), end))
        })
        .collect()
}

/// 1-based indices of reference segments the output never reached: it
/// neither crossed `y_r` nor came within 1% of it.
pub fn unreached_segments(config: &SimConfig, trace: &SimTrace) -> Vec<usize> {
    let ticks = config.reference_ticks();
    let mut out = Vec::new();
    for (j, &(start, y_r)) in ticks.iter().enumerate() {
        if start >= trace.len() {
            break;
        }
        let end = ticks.get(j + 1).map_or(trace.len(), |n| n.0.min(trace.len()));
        let band = 0.01 * y_r.abs().max(1.0);
        let e0 = trace.e[start];
        let reached = trace.e[start..end]
            .iter()
            .any(|&e| e.abs() <= band || (e > 0.0) != (e0 > 0.0));
        if !reached {
            out.push(j + 1);
        }
    }
    out
}

pub fn fault_checks(config: &SimConfig, trace: &SimTrace) -> Vec<FaultCheck> {
    config
        .faults
        .iter()
        .map(|f| {
            let k0 = tick_at_or_after(f.t, config.dt).min(trace.len());
            FaultCheck {
                t: f.t,
                agents: f.agents.clone(),
                outputs_zero: f
                    .agents
                    .iter()
                    .all(|&i| trace.u_agents[i - 1][k0..].iter().all(|&u| u == 0.0)),
            }
        })
        .collect()
}
