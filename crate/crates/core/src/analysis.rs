//! Storage functions and dissipation checks for the agent network.
//!
//! The controller side maps the broadcast error `e` to `v = u_p - u_r`.
//! Passivity is certified along a trajectory by a storage function `V_c`
//! whose growth is bounded by the supply `∫ v e dt` (plus a constant `C_u`
//! for the smooth-switching agents).

use serde::Serialize;

use crate::agents::{AgentParams, ControllerKind};
use crate::error::{Error, Result};
use crate::reference::ur_for_yr;
use crate::simulator::{SimConfig, SimTrace};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareVector {
    pub u_ri: Vec<f64>,
}

impl ShareVector {
    pub fn total(&self) -> f64 {
        self.u_ri.iter().sum()
    }
}

/// Shares `u_r` over per-agent ranges `[lo, hi]`: an equal split when it
/// fits, otherwise the water-filling level `lambda` with
/// `sum clamp(lambda, lo_i, hi_i) = u_r`.
fn water_fill(u_r: f64, bounds: &[(f64, f64)]) -> Result<Vec<f64>> {
    let lo: f64 = bounds.iter().map(|b| b.0).sum();
    let hi: f64 = bounds.iter().map(|b| b.1).sum();
    if !(lo <= u_r && u_r <= hi) || bounds.is_empty() {
        let violated = if u_r > hi {
            format!("> Σu_p={hi}")
        } else {
            format!("< Σu_n={lo}")
        };
        return Err(Error::Infeasible {
            segment: 0,
            u_r,
            violated,
        });
    }
    let equal = u_r / bounds.len() as f64;
    if bounds.iter().all(|&(l, h)| l <= equal && equal <= h) {
        return Ok(vec![equal; bounds.len()]);
    }
    let fill = |level: f64| -> f64 { bounds.iter().map(|&(l, h)| level.clamp(l, h)).sum() };
    let mut a = bounds.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let mut b = bounds.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if fill(mid) < u_r {
            a = mid;
        } else {
            b = mid;
        }
    }
    let level = 0.5 * (a + b);
    let mut shares: Vec<f64> = bounds.iter().map(|&(l, h)| level.clamp(l, h)).collect();
    // Put the rounding residue on an agent with slack so the sum is exact.
    let residue = u_r - shares.iter().sum::<f64>();
    if let Some(i) = (0..shares.len())
        .find(|&i| bounds[i].0 <= shares[i] + residue && shares[i] + residue <= bounds[i].1)
    {
        shares[i] += residue;
    }
    Ok(shares)
}

pub fn u_share(u_r: f64, params: &[AgentParams]) -> Result<ShareVector> {
    let bounds: Vec<(f64, f64)> = params.iter().map(|p| (p.u_n, p.u_p)).collect();
    Ok(ShareVector {
        u_ri: water_fill(u_r, &bounds)?,
    })
}

fn check_share(params: &AgentParams, u_ri: f64) -> Result<()> {
    if !(params.u_n <= u_ri && u_ri <= params.u_p) {
        return Err(Error::InvalidArgument(format!(
            "share u_ri={u_ri} outside [{}, {}]",
            params.u_n, params.u_p
        )));
    }
    Ok(())
}

fn check_weight(params: &AgentParams, l: f64) -> Result<()> {
    let ok = match params.schedule() {
        Some(s) => s.k_lo <= l && l <= s.k_hi,
        None => l > 0.0,
    };
    if !ok || !l.is_finite() {
        return Err(Error::InvalidArgument(format!("storage weight L={l} outside the gain range")));
    }
    Ok(())
}

fn require(params: &AgentParams, kind: ControllerKind) -> Result<()> {
    if params.kind != kind {
        return Err(Error::WrongKind(params.kind.name()));
    }
    Ok(())
}

/// `∫_0^phi (sigma(s) - u_ri) / L ds` for the two-level switch.
pub fn asc_storage(phi: f64, params: &AgentParams, u_ri: f64, l: f64) -> Result<f64> {
    require(params, ControllerKind::Asc)?;
    check_share(params, u_ri)?;
    check_weight(params, l)?;
    let level = if phi >= 0.0 { params.u_p } else { params.u_n };
    Ok((level - u_ri) * phi / l)
}

/// `sigma^-1(u)` on the ramp.
fn ramp_inverse(params: &AgentParams, u: f64) -> f64 {
    params.phi_n + (u - params.u_n) * (params.phi_p - params.phi_n) / (params.u_p - params.u_n)
}

/// `∫_0^x sigma(s) ds` for the smooth-switching role function.
fn sigma_integral(params: &AgentParams, x: f64) -> f64 {
    let slope = (params.u_p - params.u_n) / (params.phi_p - params.phi_n);
    let antiderivative = |x: f64| {
        if x <= params.phi_n {
            params.u_n * (x - params.phi_n)
        } else if x < params.phi_p {
            let h = x - params.phi_n;
            params.u_n * h + 0.5 * slope * h * h
        } else {
            let w = params.phi_p - params.phi_n;
            params.u_n * w + 0.5 * slope * w * w + params.u_p * (x - params.phi_p)
        }
    };
    antiderivative(x) - antiderivative(0.0)
}

fn check_clipped(params: &AgentParams, u_ri: f64) -> Result<()> {
    require(params, ControllerKind::Assc)?;
    check_share(params, u_ri)
}

/// Share clipped onto the role function: equal to `u_ri` beyond
/// `sigma^-1(u_ri)` (on the side away from zero) and to `sigma(phi)` elsewhere.
pub fn clipped_reference(phi: f64, params: &AgentParams, u_ri: f64) -> Result<f64> {
    check_clipped(params, u_ri)?;
    let pivot = ramp_inverse(params, u_ri);
    let beyond = if u_ri > 0.0 { phi >= pivot } else { phi <= pivot };
    Ok(if beyond { u_ri } else { params.sigma(phi) })
}

/// `∫_0^phi (sigma(s) - clipped(s)) / L ds`, piecewise quadratic in `phi`.
pub fn assc_storage(phi: f64, params: &AgentParams, u_ri: f64, l: f64) -> Result<f64> {
    check_clipped(params, u_ri)?;
    check_weight(params, l)?;
    let pivot = ramp_inverse(params, u_ri);
    let beyond = if u_ri > 0.0 { phi >= pivot } else { phi <= pivot };
    if !beyond {
        return Ok(0.0);
    }
    let g = |x: f64| sigma_integral(params, x) - u_ri * x;
    Ok((g(phi) - g(pivot)) / l)
}

/// `∫_0^phi (u_ri - clipped(s)) ds`.
pub fn vui(phi: f64, params: &AgentParams, u_ri: f64) -> Result<f64> {
    check_clipped(params, u_ri)?;
    let pivot = ramp_inverse(params, u_ri);
    let upper = if u_ri > 0.0 { phi.min(pivot) } else { phi.max(pivot) };
    Ok(u_ri * upper - sigma_integral(params, upper))
}

/// `Δu_rm · φ_mi` for one agent: the bound on `vui`.
pub fn vui_bound(params: &AgentParams) -> f64 {
    (params.u_p - params.u_n) * params.phi_p.abs().max(params.phi_n.abs())
}

/// `C_u = m · kh · Δu_rm · φ_mi` with the largest per-agent range and band.
pub fn cu_bound(params: &[AgentParams], kh: f64) -> Result<f64> {
    if params.is_empty() {
        return Err(Error::InvalidArgument("no agents".into()));
    }
    let min_gain = params.iter().map(|p| p.min_gain()).fold(f64::INFINITY, f64::min);
    let required = 1.0 / min_gain;
    if !(kh >= required) {
        return Err(Error::InvalidArgument(format!(
            "kh={kh} is below the required bound 1/min K = {required}"
        )));
    }
    let du = params.iter().map(|p| p.u_p - p.u_n).fold(0.0, f64::max);
    let band = params
        .iter()
        .map(|p| p.phi_p.abs().max(p.phi_n.abs()))
        .fold(0.0, f64::max);
    Ok(params.len() as f64 * kh * du * band)
}

/// `(Σ u_pi - u_r)^2 / (2 Σ K_i)`: quadratic storage of unsaturated integral agents.
pub fn integral_storage(u_pi: &[f64], u_r: f64, gains: &[f64]) -> f64 {
    let k_s: f64 = gains.iter().sum();
    let gap = u_pi.iter().sum::<f64>() - u_r;
    gap * gap / (2.0 * k_s)
}

/// `∫_{u_ri}^phi (clamp(s) - u_ri) / K ds`: per-agent storage of a saturated
/// integral agent. Its rate is exactly `v_i e` including on the saturation
/// limits, where the quadratic storage above is not a valid bound.
pub fn saturated_integral_storage(phi: f64, params: &AgentParams, u_ri: f64, k: f64) -> Result<f64> {
    require(params, ControllerKind::Integral)?;
    check_share(params, u_ri)?;
    let (lo, hi) = (params.u_n, params.u_p);
    let clamp_integral = |x: f64| {
        if x <= lo {
            0.5 * lo * lo + lo * (x - lo)
        } else if x >= hi {
            0.5 * hi * hi + hi * (x - hi)
        } else {
            0.5 * x * x
        }
    };
    Ok((clamp_integral(phi) - clamp_integral(u_ri) - u_ri * (phi - u_ri)) / k)
}

/// Default storage weights: `L_i = k_lo_i` for switching agents, `K_i` for integral ones.
pub fn default_storage_weights(config: &SimConfig) -> Vec<f64> {
    config.agents.iter().map(|p| p.min_gain()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassivityWindow {
    /// First row of the window.
    pub start: usize,
    /// One past the last row.
    pub end: usize,
    pub u_r: f64,
    pub shares: Vec<f64>,
    pub faulted: Vec<usize>,
    /// `V_c(start) + C_u`.
    pub c_vu: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassivityReport {
    pub kind: ControllerKind,
    pub v_c: Vec<f64>,
    /// Trapezoid `∫ v e dt`, restarted at each window.
    pub supply: Vec<f64>,
    /// `V_c(t) - V_c(t0) - ∫ v e dt - C_u`.
    pub margin: Vec<f64>,
    pub agent_storage: Vec<Vec<f64>>,
    pub c_u: f64,
    pub max_violation: f64,
    pub tol: f64,
    pub passive: bool,
    pub windows: Vec<PassivityWindow>,
    /// Integral agents: max per-step `|ΔV - (v e dt)|` of the quadratic
    /// storage over steps with no saturated agent.
    pub equality_residual: Option<f64>,
    pub unsaturated_steps: usize,
    /// Integral agents: dissipation margin of the quadratic storage over
    /// all steps, saturated ones included.
    pub quadratic_storage_max_violation: Option<f64>,
}

fn window_bounds(config: &SimConfig, len: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = config
        .reference_ticks()
        .into_iter()
        .map(|(k, _)| k)
        .chain(config.fault_ticks().into_iter().flatten())
        .filter(|&k| k < len)
        .collect();
    cuts.push(0);
    cuts.push(len);
    cuts.sort_unstable();
    cuts.dedup();
    cuts
}

/// Dissipation inequality along a recorded trajectory.
pub fn passivity_check(
    trace: &SimTrace,
    config: &SimConfig,
    weights: &[f64],
    tol: f64,
) -> Result<PassivityReport> {
    let m = config.m();
    if trace.m() != m || trace.len() != config.last_tick() + 1 || trace.dt != config.dt {
        return Err(Error::DimensionMismatch(format!(
            "trace has {} agents and {} rows, config expects {} agents and {} rows",
            trace.m(),
            trace.len(),
            m,
            config.last_tick() + 1
        )));
    }
    if weights.len() != m {
        return Err(Error::DimensionMismatch(format!("{} weights for {m} agents", weights.len())));
    }
    let kind = config.agents[0].kind;
    if config.agents.iter().any(|a| a.kind != kind) {
        return Err(Error::InvalidArgument("passivity check needs a homogeneous agent kind".into()));
    }
    for (p, &l) in config.agents.iter().zip(weights) {
        check_weight(p, l)?;
    }

    let c_u = match kind {
        ControllerKind::Assc => {
            let kh = 1.0 / config.agents.iter().map(|p| p.min_gain()).fold(f64::INFINITY, f64::min);
            cu_bound(&config.agents, kh)?
        }
        _ => 0.0,
    };

    let n = trace.len();
    let dt = trace.dt;
    let fault_ticks = config.fault_ticks();
    let reference = config.reference_ticks();
    let mut v_c = vec![0.0; n];
    let mut supply = vec![0.0; n];
    let mut margin = vec![0.0; n];
    let mut agent_storage = vec![vec![0.0; n]; m];
    let mut windows = Vec::new();

    let integral = kind == ControllerKind::Integral;
    let mut equality_residual: Option<f64> = None;
    let mut unsaturated_steps = 0;
    let mut quadratic_violation: Option<f64> = None;

    let cuts = window_bounds(config, n);
    for (w, pair) in cuts.windows(2).enumerate() {
        let (start, end) = (pair[0], pair[1]);
        let segment = reference.partition_point(|&(k, _)| k <= start) - 1;
        let u_r = ur_for_yr(&config.plant, reference[segment].1)?;
        let faulted: Vec<bool> = fault_ticks.iter().map(|f| f.is_some_and(|k| k <= start)).collect();
        let bounds: Vec<(f64, f64)> = config
            .agents
            .iter()
            .zip(&faulted)
            .map(|(p, &f)| if f { (0.0, 0.0) } else { (p.u_n, p.u_p) })
            .collect();
        let shares = water_fill(u_r, &bounds).map_err(|e| match e {
            Error::Infeasible { u_r, violated, .. } => Error::Infeasible {
                segment: w + 1,
                u_r,
                violated,
            },
            other => other,
        })?;

        for k in start..end {
            let mut total = 0.0;
            for i in 0..m {
                let p = &config.agents[i];
                let phi = trace.phi[i][k];
                let v = if faulted[i] {
                    0.0
                } else {
                    match kind {
                        ControllerKind::Asc => asc_storage(phi, p, shares[i], weights[i])?,
                        ControllerKind::Assc => assc_storage(phi, p, shares[i], weights[i])?,
                        ControllerKind::Integral => {
                            saturated_integral_storage(phi, p, shares[i], weights[i])?
                        }
                    }
                };
                agent_storage[i][k] = v;
                total += v;
            }
            v_c[k] = total;
            if k > start {
                let rate = |j: usize| (trace.u_p[j] - u_r) * trace.e[j];
                supply[k] = supply[k - 1] + 0.5 * dt * (rate(k - 1) + rate(k));
            }
            margin[k] = v_c[k] - v_c[start] - supply[k] - c_u;
        }
        let max_violation = margin[start..end].iter().copied().fold(f64::NEG_INFINITY, f64::max);

        if integral && faulted.iter().all(|f| !f) {
            let gains = weights;
            let quad = |k: usize| {
                let u: Vec<f64> = (0..m).map(|i| trace.u_agents[i][k]).collect();
                integral_storage(&u, u_r, gains)
            };
            let free = |k: usize| {
                (0..m).all(|i| {
                    let phi = trace.phi[i][k];
                    config.agents[i].u_n < phi && phi < config.agents[i].u_p
                })
            };
            let q0 = quad(start);
            let mut prev_q = q0;
            for k in start..end {
                let q = quad(k);
                let viol = q - q0 - supply[k];
                quadratic_violation = Some(quadratic_violation.map_or(viol, |x: f64| x.max(viol)));
                if k > start && free(k - 1) && free(k) {
                    let step_supply = supply[k] - supply[k - 1];
                    let r = (q - prev_q - step_supply).abs();
                    equality_residual = Some(equality_residual.map_or(r, |x: f64| x.max(r)));
                    unsaturated_steps += 1;
                }
                prev_q = q;
            }
        }

        windows.push(PassivityWindow {
            start,
            end,
            u_r,
            shares,
            faulted: (1..=m).filter(|&i| faulted[i - 1]).collect(),
            c_vu: v_c[start] + c_u,
            max_violation,
        });
    }

    let max_violation = windows
        .iter()
        .map(|w| w.max_violation)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PassivityReport {
        kind,
        v_c,
        supply,
        margin,
        agent_storage,
        c_u,
        max_violation,
        tol,
        passive: max_violation <= tol,
        windows,
        equality_residual,
        unsaturated_steps,
        quadratic_storage_max_violation: quadratic_violation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrackingMetrics {
    pub window: [f64; 2],
    pub mean_e: f64,
    pub rms_e: f64,
    pub std_e: f64,
    pub max_abs_e: f64,
    pub mean_yp: f64,
}

pub fn tracking_metrics(trace: &SimTrace, t_a: f64, t_b: f64) -> Result<TrackingMetrics> {
    let span_end = trace.t.last().copied().unwrap_or(0.0);
    if !(t_a < t_b) || t_a < 0.0 || t_b > span_end + 0.5 * trace.dt {
        return Err(Error::InvalidArgument(format!(
            "window [{t_a}, {t_b}] is not inside the trace span [0, {span_end}]"
        )));
    }
    let rows = trace.window(t_a, t_b);
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!("window [{t_a}, {t_b}] holds no samples")));
    }
    let e = &trace.e[rows.clone()];
    let n = e.len() as f64;
    let mean_e = e.iter().sum::<f64>() / n;
    let rms_e = (e.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let std_e = (e.iter().map(|v| (v - mean_e).powi(2)).sum::<f64>() / n).sqrt();
    let max_abs_e = e.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mean_yp = trace.y_p[rows].iter().sum::<f64>() / n;
    Ok(TrackingMetrics {
        window: [t_a, t_b],
        mean_e,
        rms_e,
        std_e,
        max_abs_e,
        mean_yp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::GainSchedule;
    use crate::simulator::{simulate, Preset};
    use proptest::prelude::*;

    fn asc() -> AgentParams {
        AgentParams::asc(3.0, 0.0, GainSchedule::graded(1)).unwrap()
    }

    fn assc() -> AgentParams {
        AgentParams::assc(3.0, 0.0, 0.06, 0.0, GainSchedule::graded(1)).unwrap()
    }

    #[test]
    fn share_examples() {
        let ten = vec![asc(); 10];
        assert_eq!(u_share(28.0, &ten).unwrap().u_ri, vec![2.8; 10]);
        assert_eq!(u_share(0.0, &ten).unwrap().u_ri, vec![0.0; 10]);
        assert!(matches!(u_share(35.0, &ten), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn share_water_fills_uneven_ranges() {
        let mut agents = vec![asc(); 3];
        agents[0].u_p = 1.0;
        let s = u_share(7.0, &agents).unwrap();
        assert!((s.u_ri[0] - 1.0).abs() < 1e-12);
        assert!((s.u_ri[1] - 3.0).abs() < 1e-12);
        assert!((s.total() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn asc_storage_examples() {
        let mut p = asc();
        p.gain = crate::agents::Gain::Scheduled(GainSchedule::new(10.0, 10.0, crate::agents::BoostRegion::Release).unwrap());
        assert_eq!(asc_storage(0.0, &p, 2.8, 10.0).unwrap(), 0.0);
        assert!((asc_storage(0.1, &p, 2.8, 10.0).unwrap() - 0.002).abs() < 1e-15);
        assert!((asc_storage(-0.1, &p, 2.8, 10.0).unwrap() - 0.028).abs() < 1e-15);
        assert!(asc_storage(0.1, &p, 3.5, 10.0).is_err());
        assert!(asc_storage(0.1, &assc(), 1.0, 10.0).is_err());
    }

    #[test]
    fn clipped_reference_examples() {
        let p = assc();
        assert_eq!(clipped_reference(0.05, &p, 1.0).unwrap(), 1.0);
        assert!((clipped_reference(0.01, &p, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(clipped_reference(-0.5, &p, 0.0).unwrap(), 0.0);
        assert!(clipped_reference(0.0, &p, 4.0).is_err());
    }

    #[test]
    fn assc_storage_examples() {
        let p = assc();
        assert_eq!(assc_storage(0.0, &p, 1.0, 10.0).unwrap(), 0.0);
        assert!((assc_storage(0.06, &p, 1.0, 10.0).unwrap() - 0.004).abs() < 1e-15);
        assert_eq!(assc_storage(-0.5, &p, 1.0, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn vui_examples() {
        let p = assc();
        assert_eq!(vui(0.0, &p, 1.0).unwrap(), 0.0);
        assert!((vui(0.06, &p, 1.0).unwrap() - 0.01).abs() < 1e-15);
        assert!(vui(0.06, &p, 1.0).unwrap() <= vui_bound(&p));
        assert!((vui_bound(&p) - 0.18).abs() < 1e-15);
        assert!((vui(-0.5, &p, 1.0).unwrap() + 0.5).abs() < 1e-15);
    }

    #[test]
    fn cu_examples() {
        let agents: Vec<AgentParams> = Preset::AsscCond1.config().agents;
        let cu = cu_bound(&agents, 1.0).unwrap();
        assert!((cu - 1.8).abs() <= 1.8 * f64::EPSILON);
        assert!(cu_bound(&agents, 0.5).is_err());

        let mut limit = Preset::AscCond1.config().agents;
        limit.truncate(10);
        assert_eq!(cu_bound(&limit, 1.0).unwrap(), 0.0);

        let single = AgentParams::assc(1.0, 0.0, 0.1, 0.0, GainSchedule::new(1.0, 1.0, crate::agents::BoostRegion::Release).unwrap()).unwrap();
        assert!((cu_bound(&[single], 1.0).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn integral_storage_examples() {
        assert_eq!(integral_storage(&[1.0, 2.0], 3.0, &[1.0, 1.0]), 0.0);
        let gains: Vec<f64> = (1..=10).map(crate::agents::graded_low_gain).collect();
        assert_eq!(gains.iter().sum::<f64>(), 55.0);
        let v = integral_storage(&[0.0; 10], 28.0, &gains);
        assert!((v - 7.127_272_7).abs() < 1e-7);
        assert_eq!(integral_storage(&[3.0], 1.0, &[2.0]), 1.0);
    }

    #[test]
    fn saturated_integral_storage_matches_quadratic_inside() {
        let p = AgentParams::integral(3.0, 0.0, 2.0).unwrap();
        // inside the band: (phi - u_ri)^2 / (2K)
        let v = saturated_integral_storage(2.5, &p, 1.0, 2.0).unwrap();
        assert!((v - 1.5 * 1.5 / 4.0).abs() < 1e-15);
        // beyond the limit it grows linearly with slope (u_p - u_ri)/K
        let a = saturated_integral_storage(4.0, &p, 1.0, 2.0).unwrap();
        let b = saturated_integral_storage(5.0, &p, 1.0, 2.0).unwrap();
        assert!((b - a - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_trace_is_lossless() {
        let mut cfg = Preset::AscCond1.config();
        cfg.reference = crate::reference::ReferenceSchedule::constant(0.0);
        cfg.t_end = 0.01;
        let trace = simulate(&cfg).unwrap();
        let rep = passivity_check(&trace, &cfg, &default_storage_weights(&cfg), 1e-9).unwrap();
        assert!(rep.v_c.iter().all(|&v| v == 0.0));
        assert!(rep.supply.iter().all(|&v| v == 0.0));
        assert!(rep.max_violation <= 0.0);
    }

    #[test]
    fn passivity_rejects_mismatched_inputs() {
        let mut cfg = Preset::AscCond1.config();
        cfg.t_end = 0.01;
        let trace = simulate(&cfg).unwrap();
        assert!(passivity_check(&trace, &cfg, &[1.0; 3], 1e-3).is_err());
        let mut other = cfg.clone();
        other.t_end = 0.02;
        let w = default_storage_weights(&cfg);
        assert!(passivity_check(&trace, &other, &w, 1e-3).is_err());
        // weight below k_lo
        let mut low = w.clone();
        low[0] = 0.5;
        assert!(passivity_check(&trace, &cfg, &low, 1e-3).is_err());
    }

    #[test]
    fn metrics_examples() {
        let mut cfg = Preset::AscCond1.config();
        cfg.reference = crate::reference::ReferenceSchedule::constant(0.0);
        cfg.t_end = 0.01;
        let mut trace = simulate(&cfg).unwrap();
        let m = tracking_metrics(&trace, 0.0, 0.01).unwrap();
        assert_eq!((m.mean_e, m.rms_e, m.std_e, m.max_abs_e, m.mean_yp), (0.0, 0.0, 0.0, 0.0, 0.0));

        for (k, e) in trace.e.iter_mut().enumerate() {
            *e = if k % 2 == 0 { 1.0 } else { -1.0 };
        }
        // 0.0..=0.00999 holds 1000 rows, an even count
        let m = tracking_metrics(&trace, 0.0, 0.00999).unwrap();
        assert_eq!(m.mean_e, 0.0);
        assert_eq!(m.rms_e, 1.0);
        assert!(tracking_metrics(&trace, 0.005, 0.005).is_err());
        assert!(tracking_metrics(&trace, 0.0, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn storages_nonnegative(phi in -1.0..1.0f64, share in 0.0..=3.0f64) {
            prop_assert!(asc_storage(phi, &asc(), share, 10.0).unwrap() >= 0.0);
            prop_assert!(assc_storage(phi, &assc(), share, 10.0).unwrap() >= -1e-15);
            let int = AgentParams::integral(3.0, 0.0, 2.0).unwrap();
            prop_assert!(saturated_integral_storage(phi * 5.0, &int, share, 2.0).unwrap() >= -1e-15);
        }

        #[test]
        fn vui_below_bound(phi in -1.0..1.0f64, share in 0.0..=3.0f64) {
            prop_assert!(vui(phi, &assc(), share).unwrap() <= vui_bound(&assc()) + 1e-15);
        }

        #[test]
        fn clipped_integrand_sign(phi in -0.2..0.2f64, e in -5.0..5.0f64, share in 0.0..=3.0f64) {
            let p = assc();
            let term = (p.sigma(phi) - clipped_reference(phi, &p, share).unwrap()) * e;
            if phi * e <= 0.0 {
                prop_assert!(term <= 1e-15);
            }
            if phi * e >= 0.0 {
                prop_assert!(term >= -1e-15);
            }
        }

        #[test]
        fn gain_ratio_direction(i in 1usize..=10, phi in -1.0..1.0f64, e in -5.0..5.0f64) {
            let p = AgentParams::asc(3.0, 0.0, GainSchedule::graded(i)).unwrap();
            let l = p.min_gain();
            let ratio = crate::agents::gain(&p, phi, e).unwrap() / l;
            if phi * e < 0.0 {
                prop_assert!(ratio >= 1.0);
            } else {
                prop_assert_eq!(ratio, 1.0);
            }
        }

        #[test]
        fn shares_sum_and_bounds(u_r in 0.0..=30.0f64, cap in 1.0..3.0f64) {
            let mut agents = vec![asc(); 10];
            agents[0].u_p = cap;
            agents[1].u_p = cap;
            prop_assume!(u_r <= 24.0 + 2.0 * cap);
            let s = u_share(u_r, &agents).unwrap();
            prop_assert!((s.total() - u_r).abs() <= 1e-12);
            for (x, a) in s.u_ri.iter().zip(&agents) {
                prop_assert!(a.u_n <= *x && *x <= a.u_p);
            }
        }
    }
}
