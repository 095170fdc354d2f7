//! Browser bindings: preset simulation with editable reference levels, the
//! SPR test, and storage-function curves. Every export returns JSON text.

use bcast_core::agents::{AgentParams, ControllerKind, GainSchedule};
use bcast_core::analysis::{
    asc_storage, assc_storage, default_storage_weights, passivity_check, tracking_metrics, vui,
    TrackingMetrics,
};
use bcast_core::lti::{spr_test, SprVerdict, TransferFunction};
use bcast_core::poly::format_ascending;
use bcast_core::reference::{ReferenceSchedule, ReferenceSegment};
use bcast_core::simulator::{simulate, Preset, SimTrace};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Smallest step the page accepts; keeps a run under a few hundred thousand ticks.
pub const MIN_DT: f64 = 1e-6;
pub const MAX_POINTS: usize = 20_000;

#[derive(Debug, Serialize)]
pub struct Series {
    pub preset: String,
    pub dt: f64,
    pub rows: usize,
    pub t: Vec<f64>,
    pub y_r: Vec<f64>,
    pub y_p: Vec<f64>,
    pub u_p: Vec<f64>,
    pub u_agents: Vec<Vec<f64>>,
    pub metrics: TrackingMetrics,
    pub max_violation: Option<f64>,
    pub c_u: Option<f64>,
}

/// Every `stride`-th row plus the last one.
fn decimate(col: &[f64], stride: usize) -> Vec<f64> {
    let mut out: Vec<f64> = col.iter().step_by(stride).copied().collect();
    if !(col.len() - 1).is_multiple_of(stride) {
        out.push(col[col.len() - 1]);
    }
    out
}

fn series(trace: &SimTrace, points: usize) -> Vec<Vec<f64>> {
    let stride = trace.len().div_ceil(points.clamp(2, MAX_POINTS)).max(1);
    let mut cols = vec![
        decimate(&trace.t, stride),
        decimate(&trace.y_r, stride),
        decimate(&trace.y_p, stride),
        decimate(&trace.u_p, stride),
    ];
    cols.extend(trace.u_agents.iter().map(|c| decimate(c, stride)));
    cols
}

/// Runs a preset with its reference levels replaced by `levels` (one per
/// segment, or empty to keep them) and returns at most `points` samples.
pub fn run_preset(name: &str, dt: f64, levels: &[f64], points: usize) -> Result<Series, String> {
    let preset: Preset = name.parse().map_err(|e| format!("{e}"))?;
    let mut cfg = preset.config();
    if !dt.is_finite() || dt < MIN_DT {
        return Err(format!("dt must be a finite value of at least {MIN_DT}"));
    }
    cfg.dt = dt;
    if !levels.is_empty() {
        let segments = cfg.reference.segments();
        if levels.len() != segments.len() {
            return Err(format!("{name} has {} reference segments, got {} levels", segments.len(), levels.len()));
        }
        let segments = segments
            .iter()
            .zip(levels)
            .map(|(s, &y_r)| ReferenceSegment { t_start: s.t_start, y_r })
            .collect();
        cfg.reference = ReferenceSchedule::new(segments).map_err(|e| e.to_string())?;
    }
    let trace = simulate(&cfg).map_err(|e| e.to_string())?;
    let last = cfg.reference.segments().last().map_or(0.0, |s| s.t_start);
    let metrics = tracking_metrics(&trace, last + 0.75 * (cfg.t_end - last), cfg.t_end).map_err(|e| e.to_string())?;
    let passivity = passivity_check(&trace, &cfg, &default_storage_weights(&cfg), cfg.analysis.tol).ok();
    let mut cols = series(&trace, points).into_iter();
    let mut next = || cols.next().unwrap_or_default();
    Ok(Series {
        preset: preset.name().to_string(),
        dt,
        rows: trace.len(),
        t: next(),
        y_r: next(),
        y_p: next(),
        u_p: next(),
        u_agents: cols.collect(),
        metrics,
        max_violation: passivity.as_ref().map(|p| p.max_violation),
        c_u: passivity.as_ref().map(|p| p.c_u),
    })
}

#[derive(Debug, Serialize)]
pub struct SprSummary {
    pub verdict: SprVerdict,
    pub hurwitz: bool,
    pub realpart_poly: Vec<f64>,
    pub realpart_text: String,
    pub relative_degree: Option<usize>,
    pub reason: Option<String>,
}

/// Coefficients separated by commas or whitespace, highest power first.
pub fn parse_coefficients(text: &str) -> Result<Vec<f64>, String> {
    let coeffs: Vec<f64> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect::<Result<_, _>>()?;
    if coeffs.is_empty() {
        return Err("no coefficients".into());
    }
    Ok(coeffs)
}

pub fn spr_summary(num: &str, den: &str) -> Result<SprSummary, String> {
    let tf = TransferFunction::new(&parse_coefficients(num)?, &parse_coefficients(den)?)
        .map_err(|e| e.to_string())?;
    let cert = spr_test(&tf);
    Ok(SprSummary {
        verdict: cert.verdict,
        hurwitz: cert.hurwitz,
        realpart_text: format_ascending(&cert.realpart_poly),
        realpart_poly: cert.realpart_poly,
        relative_degree: cert.relative_degree,
        reason: cert.reason,
    })
}

#[derive(Debug, Serialize)]
pub struct StorageCurve {
    pub phi: Vec<f64>,
    pub sigma: Vec<f64>,
    pub storage: Vec<f64>,
    /// Switching-ramp agents only.
    pub vui: Option<Vec<f64>>,
}

/// Storage of one preset agent (levels 0 and 3, ramp 0..0.06, weight 10)
/// with share `u_ri`, sampled at `n` phases on `[phi_min, phi_max]`.
pub fn storage_curve(kind: &str, u_ri: f64, phi_min: f64, phi_max: f64, n: usize) -> Result<StorageCurve, String> {
    if !(phi_min < phi_max) || !phi_min.is_finite() || !phi_max.is_finite() {
        return Err("phase range must be finite with min < max".into());
    }
    let n = n.clamp(2, MAX_POINTS);
    let gains = GainSchedule::graded(1);
    let params = match kind {
        "asc" => AgentParams::asc(3.0, 0.0, gains),
        "assc" => AgentParams::assc(3.0, 0.0, 0.06, 0.0, gains),
        other => return Err(format!("unknown controller {other:?}; expected asc or assc")),
    }
    .map_err(|e| e.to_string())?;
    let l = params.min_gain();
    let phi: Vec<f64> = (0..n).map(|i| phi_min + (phi_max - phi_min) * i as f64 / (n - 1) as f64).collect();
    let storage = phi
        .iter()
        .map(|&x| match params.kind {
            ControllerKind::Asc => asc_storage(x, &params, u_ri, l),
            _ => assc_storage(x, &params, u_ri, l),
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let vui = match params.kind {
        ControllerKind::Assc => Some(
            phi.iter()
                .map(|&x| vui(x, &params, u_ri))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?,
        ),
        _ => None,
    };
    Ok(StorageCurve {
        sigma: phi.iter().map(|&x| params.sigma(x)).collect(),
        phi,
        storage,
        vui,
    })
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = runPreset)]
pub fn run_preset_js(name: &str, dt: f64, levels: Vec<f64>, points: usize) -> Result<String, JsError> {
    to_json(run_preset(name, dt, &levels, points))
}

#[wasm_bindgen(js_name = sprTest)]
pub fn spr_test_js(num: &str, den: &str) -> Result<String, JsError> {
    to_json(spr_summary(num, den))
}

#[wasm_bindgen(js_name = storageCurve)]
pub fn storage_curve_js(kind: &str, u_ri: f64, phi_min: f64, phi_max: f64, n: usize) -> Result<String, JsError> {
    to_json(storage_curve(kind, u_ri, phi_min, phi_max, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimation_keeps_endpoints() {
        let col: Vec<f64> = (0..11).map(f64::from).collect();
        assert_eq!(decimate(&col, 3), vec![0.0, 3.0, 6.0, 9.0, 10.0]);
        assert_eq!(decimate(&col, 5), vec![0.0, 5.0, 10.0]);
        assert_eq!(decimate(&col, 1), col);
    }

    #[test]
    fn preset_series() {
        let s = run_preset("asc-cond1", 1e-5, &[], 500).unwrap();
        assert_eq!(s.rows, 40_001);
        assert!(s.t.len() <= 501);
        assert_eq!(s.t.last(), Some(&0.4));
        assert_eq!(s.u_agents.len(), 10);
        assert!(s.u_agents.iter().all(|c| c.len() == s.t.len()));
        assert!((s.metrics.mean_yp - 10.0).abs() < 0.5);
        assert!(s.max_violation.unwrap() < 1e-2);
    }

    #[test]
    fn custom_levels() {
        let s = run_preset("asc-cond1", 2e-5, &[20.0, 5.0], 200).unwrap();
        assert_eq!(s.y_r.first(), Some(&20.0));
        assert_eq!(s.y_r.last(), Some(&5.0));
        assert!((s.metrics.mean_yp - 5.0).abs() < 0.5);
        assert!(run_preset("asc-cond1", 1e-5, &[40.0, 10.0], 200).unwrap_err().contains("infeasible"));
        assert!(run_preset("asc-cond1", 1e-5, &[10.0], 200).is_err());
        assert!(run_preset("asc-cond1", 1e-8, &[], 200).is_err());
        assert!(run_preset("nope", 1e-5, &[], 200).is_err());
    }

    #[test]
    fn spr_of_plant() {
        let s = spr_summary("75, 4900", "1 98 4900").unwrap();
        assert_eq!(s.verdict, SprVerdict::StrictlyPositiveReal);
        assert_eq!(s.realpart_text, "24010000 + 2450x");
        let s = spr_summary("1", "1 1 1").unwrap();
        assert_eq!(s.verdict, SprVerdict::NotPositiveReal);
        assert!(spr_summary("1, x", "1 1").is_err());
        assert!(spr_summary("", "1 1").is_err());
    }

    #[test]
    fn storage_curves() {
        let c = storage_curve("assc", 1.0, -0.1, 0.1, 201).unwrap();
        assert_eq!(c.phi.len(), 201);
        assert!(c.storage.iter().all(|&v| v >= 0.0));
        let i = c.phi.iter().position(|&x| (x - 0.06).abs() < 1e-12).unwrap();
        assert!((c.storage[i] - 0.004).abs() < 1e-12);
        assert!((c.vui.as_ref().unwrap()[i] - 0.01).abs() < 1e-12);
        let c = storage_curve("asc", 1.5, -1.0, 1.0, 3).unwrap();
        assert_eq!(c.storage, vec![0.15, 0.0, 0.15]);
        assert!(c.vui.is_none());
        assert!(storage_curve("asc", 4.0, -1.0, 1.0, 3).is_err());
        assert!(storage_curve("pid", 1.0, -1.0, 1.0, 3).is_err());
        assert!(storage_curve("asc", 1.0, 1.0, -1.0, 3).is_err());
    }

    #[test]
    fn json_shape() {
        let text = to_json(spr_summary("75 4900", "1 98 4900")).ok().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["verdict"], "StrictlyPositiveReal");
        assert_eq!(v["realpart_poly"][1], 24010000.0);
    }
}
