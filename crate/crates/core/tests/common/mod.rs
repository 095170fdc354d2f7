//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use bcast_core::agents::AgentParams;
use bcast_core::lti::{rk4_step, StateSpace};
use nalgebra::{DMatrix, DVector};

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (left, right) = (simpson(f, a, m), simpson(f, m, b));
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, left, 0.5 * tol, depth - 1) + adaptive(f, m, b, right, 0.5 * tol, depth - 1)
}

/// Oriented adaptive-Simpson integral `∫_a^b f`, split at the kinks in
/// `breaks` so no panel straddles one.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    if a == b {
        return 0.0;
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut cuts = vec![lo];
    cuts.extend(breaks.iter().copied().filter(|&x| lo < x && x < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let total: f64 = cuts
        .windows(2)
        .map(|w| adaptive(f, w[0], w[1], simpson(f, w[0], w[1]), 1e-15, 50))
        .sum();
    sign * total
}

/// `|value - oracle| <= 1e-9 |oracle|`, with a floor for values that are zero.
pub fn close(value: f64, oracle: f64) -> bool {
    (value - oracle).abs() <= 1e-9 * oracle.abs() + 1e-14
}

/// Role functions written out from their definitions.
pub fn sigma_asc(p: &AgentParams, x: f64) -> f64 {
    if x > 0.0 {
        p.u_p
    } else {
        p.u_n
    }
}

pub fn sigma_ramp(p: &AgentParams, x: f64) -> f64 {
    let lin = p.u_n + (p.u_p - p.u_n) * (x - p.phi_n) / (p.phi_p - p.phi_n);
    lin.max(p.u_n).min(p.u_p)
}

pub fn pivot(p: &AgentParams, u_ri: f64) -> f64 {
    p.phi_n + (u_ri - p.u_n) * (p.phi_p - p.phi_n) / (p.u_p - p.u_n)
}

pub fn clipped(p: &AgentParams, u_ri: f64, x: f64) -> f64 {
    let s = pivot(p, u_ri);
    let beyond = if u_ri > 0.0 { x >= s } else { x <= s };
    if beyond {
        u_ri
    } else {
        sigma_ramp(p, x)
    }
}

/// Exact response of `x' = Ax + b u` from `x0` over `t` with constant `u`,
/// via the exponential of the input-augmented matrix.
pub fn expm_step(ss: &StateSpace, x0: &DVector<f64>, u: f64, t: f64) -> DVector<f64> {
    let n = ss.order();
    let mut aug = DMatrix::zeros(n + 1, n + 1);
    aug.view_mut((0, 0), (n, n)).copy_from(&ss.a);
    aug.view_mut((0, n), (n, 1)).copy_from(&ss.b);
    let phi = (aug * t).exp();
    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(x0);
    z[n] = u;
    (phi * z).rows(0, n).into_owned()
}

pub fn rk4_run(ss: &StateSpace, u: f64, dt: f64, steps: usize) -> DVector<f64> {
    let mut x = DVector::zeros(ss.order());
    for _ in 0..steps {
        x = rk4_step(ss, &x, u, dt).unwrap();
    }
    x
}

/// Error ratios of RK4 against the exponential for the unit step response
/// over `t`, halving the step from `t / 25`.
pub fn rk4_error_ratios(ss: &StateSpace, t: f64) -> (Vec<f64>, Vec<f64>) {
    let exact = expm_step(ss, &DVector::zeros(ss.order()), 1.0, t);
    let errors: Vec<f64> = [25, 50, 100, 200]
        .iter()
        .map(|&n| (rk4_run(ss, 1.0, t / n as f64, n) - &exact).norm())
        .collect();
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    (errors, ratios)
}
