use pemc_core::analysis::*;
use pemc_core::dipole::dipole_dipole_critical_angle;
use pemc_core::engine::{force_deltas, Discretization, Geometry, ThermalState};
use pemc_core::pfa::pfa_critical_angle;
use std::f64::consts::PI;

fn disc() -> Discretization {
    Discretization {
        m_tol: 1e-10,
        xi_rel_tol: 1e-5,
        ..Default::default()
    }
}

#[test]
fn critical_angle_lies_in_asymptotic_band() {
    let ht = ThermalState::high_temperature();
    let lo = pfa_critical_angle(f64::INFINITY).unwrap();
    let hi = dipole_dipole_critical_angle(f64::INFINITY).unwrap();
    let mut last = 0.0;
    for x in [0.3, 1.0, 3.0] {
        let d = critical_angle(x, 0.25, ht, &disc()).unwrap().unwrap();
        assert!(lo < d && d < hi, "x = {x}: {d}");
        // the curves grow with distance
        assert!(d > last);
        last = d;
    }
    let d0 = critical_angle(1.0, 0.25, ThermalState::zero(), &disc()).unwrap().unwrap();
    let (lo0, hi0) = (pfa_critical_angle(0.0).unwrap(), dipole_dipole_critical_angle(0.0).unwrap());
    assert!(lo0 < d0 && d0 < hi0, "{d0}");
}

#[test]
fn equilibrium_is_stable() {
    let delta = PI / 4.0;
    let scan = ThermalScan::row(f64::INFINITY).unwrap();
    let eq = equilibrium_distance(delta, 0.25, scan, &log_grid(0.1, 10.0, 5), &disc()).unwrap().unwrap();
    assert!(eq.stable);
    let f = |x: f64| {
        let g = Geometry::from_x_u(x, 0.25, 1.0).unwrap();
        force_deltas(&g, &[delta], ThermalState::high_temperature(), &disc()).unwrap()[0].force_kt.unwrap()
    };
    assert!(f(eq.x * (1.0 - 1e-3)) > 0.0);
    assert!(f(eq.x * (1.0 + 1e-3)) < 0.0);
    // PEC and PMC bodies never balance
    assert!(equilibrium_distance(0.0, 0.25, scan, &log_grid(0.1, 10.0, 4), &disc()).unwrap().is_none());
    assert!(equilibrium_distance(PI / 2.0, 0.25, scan, &log_grid(0.1, 10.0, 4), &disc()).unwrap().is_none());
}

#[test]
fn high_temperature_sum_rule_is_negative() {
    let ht = ThermalState::high_temperature();
    let mut by_u = Vec::new();
    for u in [0.0, 0.05, 0.25] {
        for ym1 in [0.5, 2.0, 20.0] {
            let g = Geometry::from_y_minus_one(ym1, u, 1.0).unwrap();
            let s = sumrule_integral(&g, ht, &disc(), 1e-6).unwrap();
            let v = s.y3_scaled.unwrap();
            assert!(v < 0.0, "u {u}, y - 1 = {ym1}: {v}");
            if ym1 == 2.0 {
                by_u.push(v.abs());
            }
        }
    }
    // a plane violates the sum rule much less than two equal spheres
    assert!(by_u[0] < 0.1 * by_u[2], "{by_u:?}");
}

#[test]
fn force_map_is_normalized_and_ordered() {
    let spec = PhaseMapSpec {
        u: 0.25,
        temperatures: vec![1.0, f64::INFINITY],
        x_grid: vec![0.5, 2.0],
        deltas: vec![0.0, 0.8, PI / 2.0],
        target: MapTarget::ForceMap,
        disc: disc(),
    };
    let rows = phase_map(&spec).unwrap();
    assert_eq!(rows.len(), 12);
    for (i, r) in rows.iter().enumerate() {
        assert!(r.error.is_none());
        assert_eq!(r.x, spec.x_grid[(i / 3) % 2]);
        assert_eq!(r.delta, spec.deltas[i % 3]);
        if r.delta == 0.0 {
            assert_eq!(r.ratio, 1.0);
        }
    }
    assert!(rows[2].ratio < 0.0);
    assert_eq!(rows, phase_map(&spec).unwrap());
}

#[test]
fn failing_cells_do_not_abort_the_map() {
    let spec = PhaseMapSpec {
        u: 0.0,
        temperatures: vec![0.5, f64::INFINITY],
        x_grid: vec![1.0],
        deltas: vec![0.0, 1.0],
        target: MapTarget::ForceMap,
        disc: Discretization {
            max_matsubara: 2,
            ..disc()
        },
    };
    let rows = phase_map(&spec).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].error.is_some() && rows[1].error.is_some());
    assert!(rows[0].force.is_nan());
    assert!(rows[2].error.is_none() && rows[3].error.is_none());
}

#[test]
fn critical_angle_map_matches_direct_call() {
    let spec = PhaseMapSpec {
        u: 0.25,
        temperatures: vec![f64::INFINITY],
        x_grid: vec![2.0],
        deltas: vec![],
        target: MapTarget::CriticalAngle,
        disc: disc(),
    };
    let rows = phase_map(&spec).unwrap();
    let d = critical_angle(2.0, 0.25, ThermalState::high_temperature(), &disc()).unwrap().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].delta, d);
}
