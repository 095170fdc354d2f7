//! Closed-form storage functions against adaptive quadrature of their integrands.

use bcast_core::agents::{AgentParams, BoostRegion, GainSchedule};
use bcast_core::analysis::{asc_storage, assc_storage, vui};

mod common;
use common::{clipped, close, integrate, sigma_asc, sigma_ramp};

fn gains() -> GainSchedule {
    GainSchedule::new(10.0, 14.0, BoostRegion::Release).unwrap()
}

#[test]
fn asc_storage_matches_quadrature() {
    let p = AgentParams::asc(3.0, -1.0, gains()).unwrap();
    let mut checked = 0;
    for i in 0..20 {
        let phi = -0.5 + i as f64 * 0.05 + 0.013;
        for j in 0..10 {
            let u_ri = -1.0 + 4.0 * j as f64 / 9.0;
            let l = 10.0 + (j % 3) as f64 * 2.0;
            let oracle = integrate(&|x| (sigma_asc(&p, x) - u_ri) / l, 0.0, phi, &[]);
            let value = asc_storage(phi, &p, u_ri, l).unwrap();
            assert!(close(value, oracle), "phi={phi} u_ri={u_ri}: {value} vs {oracle}");
            checked += 1;
        }
    }
    assert_eq!(checked, 200);
}

fn ramp_agents() -> [AgentParams; 2] {
    [
        AgentParams::assc(3.0, 0.0, 0.06, 0.0, gains()).unwrap(),
        AgentParams::assc(3.0, -1.0, 0.06, -0.02, gains()).unwrap(),
    ]
}

/// Phases below, inside and beyond the ramp, on both sides of every pivot.
fn phase_grid() -> Vec<f64> {
    (0..20).map(|i| -0.09 + 0.0095 * i as f64).collect()
}

#[test]
fn assc_storage_and_vui_match_quadrature() {
    let mut checked = 0;
    for p in ramp_agents() {
        let shares: Vec<f64> = (0..5).map(|j| p.u_n + (p.u_p - p.u_n) * j as f64 / 4.0).collect();
        for &u_ri in &shares {
            let pivot = p.phi_n + (u_ri - p.u_n) * (p.phi_p - p.phi_n) / (p.u_p - p.u_n);
            let breaks = [p.phi_n, p.phi_p, pivot];
            for phi in phase_grid() {
                let s = integrate(&|x| (sigma_ramp(&p, x) - clipped(&p, u_ri, x)) / 10.0, 0.0, phi, &breaks);
                let v = integrate(&|x| u_ri - clipped(&p, u_ri, x), 0.0, phi, &breaks);
                let s_cf = assc_storage(phi, &p, u_ri, 10.0).unwrap();
                let v_cf = vui(phi, &p, u_ri).unwrap();
                assert!(close(s_cf, s), "storage phi={phi} u_ri={u_ri}: {s_cf} vs {s}");
                assert!(close(v_cf, v), "vui phi={phi} u_ri={u_ri}: {v_cf} vs {v}");
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 200);
}

#[test]
fn documented_values() {
    let p = &ramp_agents()[0];
    let s = integrate(&|x| (sigma_ramp(p, x) - clipped(p, 1.0, x)) / 10.0, 0.0, 0.06, &[0.02]);
    assert!((s - 0.004).abs() < 1e-12);
    let v = integrate(&|x| 1.0 - clipped(p, 1.0, x), 0.0, 0.06, &[0.02]);
    assert!((v - 0.01).abs() < 1e-12);
    let v = integrate(&|x| 1.0 - clipped(p, 1.0, x), 0.0, -0.5, &[]);
    assert!((v + 0.5).abs() < 1e-12);
}
