use approx::assert_relative_eq;
use pemc_core::engine::*;
use pemc_core::hightemp::{tr_m_single, ConformalGeometry};
use pemc_core::mie::PemcMaterial;
use pemc_core::pfa::{pfa_energy_t0, pfa_geometric_correction};
use pemc_core::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn pemc(t: f64) -> PemcMaterial {
    PemcMaterial::new(t).unwrap()
}

fn quick() -> Discretization {
    Discretization {
        xi_rel_tol: 1e-6,
        ..Default::default()
    }
}

#[test]
fn zero_frequency_trace_matches_closed_form() {
    let disc = Discretization::default();
    for (ym1, u, delta) in [(0.5, 0.0, 0.3), (2.0, 0.25, 1.1), (1.0, 0.05, 0.7), (8.0, 0.25, 0.0), (0.2, 0.0, 1.5)] {
        let g = Geometry::from_y_minus_one(ym1, u, 1.0).unwrap();
        let engine = round_trip_trace(&g, -delta, 0.0, 1, &disc).unwrap();
        let exact = tr_m_single(delta, &ConformalGeometry::from_y_minus_one(ym1, u).unwrap());
        assert_relative_eq!(engine, exact, max_relative = 1e-7);
    }
}

#[test]
fn exchange_symmetry() {
    let g = Geometry::new(1.7, 0.6, 0.9).unwrap();
    let s = g.swapped().unwrap();
    let disc = Discretization::default();
    for xi in [0.0, 0.4, 2.0] {
        let a = logdet_f_n(&build_kernel(&g, pemc(0.2), pemc(1.1), xi, &disc).unwrap()).unwrap();
        let b = logdet_f_n(&build_kernel(&s, pemc(1.1), pemc(0.2), xi, &disc).unwrap()).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }
    let th = ThermalState::new(1.3).unwrap();
    let a = free_energy(&g, PemcMaterial::pec(), pemc(0.9), th, &disc).unwrap();
    let b = free_energy(&s, pemc(0.9), PemcMaterial::pec(), th, &disc).unwrap();
    assert_relative_eq!(a.free_energy.unwrap(), b.free_energy.unwrap(), max_relative = 1e-10);
}

#[test]
fn only_the_angle_difference_matters() {
    let g = Geometry::new(1.2, 2.5, 1.0).unwrap();
    let disc = Discretization::default();
    for xi in [0.0, 0.7] {
        let f = |a: f64, b: f64| logdet_f_n(&build_kernel(&g, pemc(a), pemc(b), xi, &disc).unwrap()).unwrap();
        let base = f(0.0, 0.6);
        assert_relative_eq!(f(0.5, 1.1), base, max_relative = 1e-10);
        assert_relative_eq!(f(0.9, 1.5), base, max_relative = 1e-10);
        assert_relative_eq!(f(0.6, 0.0), base, max_relative = 1e-10);
    }
    let p = Geometry::sphere_plane(1.0, 0.5).unwrap();
    let f = |a: f64, b: f64| logdet_f_n(&build_kernel(&p, pemc(a), pemc(b), 0.8, &disc).unwrap()).unwrap();
    assert_relative_eq!(f(0.3, 1.2), f(0.0, 0.9), max_relative = 1e-10);
}

#[test]
fn logdet_equals_round_trip_series() {
    let disc = Discretization {
        nodes: Some(16),
        ..Default::default()
    };
    for (g, xi) in [
        (Geometry::new(1.0, 1.0, 1.5).unwrap(), 0.3),
        (Geometry::sphere_plane(2.0, 1.0).unwrap(), 0.0),
        (Geometry::new(0.5, 3.0, 1.0).unwrap(), 1.2),
    ] {
        let k = build_kernel(&g, PemcMaterial::pec(), pemc(0.4), xi, &disc).unwrap();
        let exact = logdet_f_n(&k).unwrap();
        let t1 = k.trace_power(1).abs();
        let t2 = k.trace_power(2).abs();
        // spectral radius estimate from the trace ratio
        let rho = (t2 / t1).min(0.9);
        let terms = 40;
        let series: f64 = -(1..=terms).map(|r| k.trace_power(r) / r as f64).sum::<f64>();
        let tail = t1 * rho.powi(terms as i32) / (1.0 - rho);
        assert!((series - exact).abs() <= tail + 1e-12 * exact.abs(), "{series} vs {exact}, tail {tail}");
    }
}

#[test]
fn free_energy_magnitude_decreases_with_distance() {
    let disc = quick();
    for delta in [0.0, PI / 2.0] {
        let mut last = f64::INFINITY;
        for l in [0.3, 0.6, 1.2, 2.4, 4.8] {
            let g = Geometry::new(1.0, 1.0, l).unwrap();
            // hbar c / L to a common unit
            let e = free_energy_deltas(&g, &[delta], ThermalState::zero(), &disc).unwrap()[0].free_energy.unwrap() / l;
            assert!(e.abs() < last, "delta {delta}, L {l}: {e}");
            last = e.abs();
        }
    }
}

#[test]
fn matsubara_terms_decay() {
    let g = Geometry::sphere_plane(5.0, 1.0).unwrap();
    let r = &free_energy_deltas(&g, &[0.0, 1.2], ThermalState::new(0.5).unwrap(), &Discretization::default()).unwrap();
    for rep in r {
        let f = &rep.per_n;
        assert!(f.len() > 6);
        for w in f[3..].windows(2) {
            assert!(w[1].abs() < w[0].abs());
        }
    }
    // kT and hbar c / L units are tied by tau / 2 pi
    assert_relative_eq!(r[0].free_energy.unwrap(), 0.5 / (2.0 * PI) * r[0].free_energy_kt.unwrap(), max_relative = 1e-14);
}

#[test]
fn attraction_and_repulsion() {
    let g = Geometry::from_x_u(0.1, 0.0, 1.0).unwrap();
    let disc = Discretization::default();
    let k_pec = build_kernel(&g, PemcMaterial::pec(), PemcMaterial::pec(), 1.0, &disc).unwrap();
    let k_pmc = build_kernel(&g, PemcMaterial::pec(), PemcMaterial::pmc(), 1.0, &disc).unwrap();
    assert!(logdet_f_n(&k_pec).unwrap() < 0.0);
    assert!(logdet_f_n(&k_pmc).unwrap() > 0.0);
    let f = force_deltas(&g, &[0.0, PI / 2.0], ThermalState::new(2.0).unwrap(), &disc).unwrap();
    assert!(f[0].force.unwrap() < 0.0);
    assert!(f[1].force.unwrap() > 0.0);
    assert!(f[0].energy.convergence.warnings.is_empty());
}

#[test]
fn proximity_limit_at_small_distance() {
    let x = 0.05;
    let g = Geometry::from_x_u(x, 0.0, 1.0).unwrap();
    let r = free_energy_deltas(&g, &[0.0, PI / 2.0], ThermalState::zero(), &quick()).unwrap();
    // the next correction is non-analytic in x and larger for delta = 0
    for ((d, tol), rep) in [(0.0, 3e-2), (PI / 2.0, 2e-3)].iter().zip(&r) {
        let want = pfa_energy_t0(x, *d).unwrap() + pfa_geometric_correction(x, 0.0, *d).unwrap();
        assert_relative_eq!(rep.free_energy.unwrap(), want, max_relative = *tol);
    }
}

#[test]
fn rejects_bad_input() {
    assert!(matches!(Geometry::new(1.0, -1.0, 1.0), Err(Error::Invalid(_))));
    assert!(matches!(Geometry::new(1.0, 1.0, 0.0), Err(Error::Invalid(_))));
    assert!(Geometry::sphere_plane(1.0, 1.0).unwrap().swapped().is_err());
    assert!(ThermalState::new(-0.1).is_err());
    let g = Geometry::sphere_plane(1.0, 1.0).unwrap();
    let disc = Discretization::default();
    assert!(free_energy_deltas(&g, &[2.0], ThermalState::zero(), &disc).is_err());
    let coarse = Discretization {
        force_step: 0.5,
        ..Default::default()
    };
    assert!(force_deltas(&g, &[0.0], ThermalState::zero(), &coarse).is_err());
    assert!(build_kernel(&g, PemcMaterial::pec(), PemcMaterial::pec(), -1.0, &disc).is_err());
}

#[test]
fn geometry_parametrizations_agree() {
    let g = Geometry::from_x_u(0.3, 0.16, 2.0).unwrap();
    assert_relative_eq!(g.x(), 0.3, max_relative = 1e-14);
    assert_relative_eq!(g.u(), 0.16, max_relative = 1e-14);
    let h = Geometry::from_y_minus_one(g.y() - 1.0, 0.16, 2.0).unwrap();
    assert_relative_eq!(h.r1(), g.r1(), max_relative = 1e-12);
    assert_relative_eq!(h.r2(), g.r2(), max_relative = 1e-12);
    let p = Geometry::from_x_u(0.5, 0.0, 1.0).unwrap();
    assert!(p.is_plane());
    assert_relative_eq!(p.script_l(), 3.0);
}

#[test]
fn low_frequencies_approach_the_static_kernel() {
    let g = Geometry::new(1.0, 2.0, 0.5).unwrap();
    let disc = Discretization::default();
    let f = |xi: f64| logdet_f_n(&build_kernel(&g, PemcMaterial::pec(), pemc(0.6), xi, &disc).unwrap()).unwrap();
    let f0 = f(0.0);
    let (d1, d2) = ((f(1e-3) - f0).abs(), (f(1e-2) - f0).abs());
    assert!(d2 < 1e-2 * f0.abs(), "{d2}");
    // the static limit is approached monotonically
    assert!(d1 < d2);
}

#[test]
fn fixed_multipole_cutoff() {
    let g = Geometry::from_x_u(1.0, 0.0, 1.0).unwrap();
    let disc = Discretization::default();
    let auto = build_kernel(&g, PemcMaterial::pec(), pemc(0.5), 1.0, &disc).unwrap();
    let fixed = Discretization {
        l_max: Some(auto.lmax + 20),
        ..Default::default()
    };
    let k = build_kernel(&g, PemcMaterial::pec(), pemc(0.5), 1.0, &fixed).unwrap();
    assert_eq!(k.lmax, auto.lmax + 20);
    assert_relative_eq!(logdet_f_n(&k).unwrap(), logdet_f_n(&auto).unwrap(), max_relative = 1e-10);
    let tiny = Discretization {
        l_max: Some(2),
        ..Default::default()
    };
    assert!(matches!(build_kernel(&g, PemcMaterial::pec(), pemc(0.5), 1.0, &tiny), Err(Error::NoConvergence(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exchange_symmetry_random(r1 in 0.3f64..3.0, r2 in 0.3f64..3.0, l in 0.5f64..2.0, t1 in 0.0f64..1.57, t2 in 0.0f64..1.57, xi in 0.0f64..2.0) {
        let g = Geometry::new(r1, r2, l).unwrap();
        let disc = Discretization { nodes: Some(24), ..Default::default() };
        let a = logdet_f_n(&build_kernel(&g, pemc(t1), pemc(t2), xi, &disc).unwrap()).unwrap();
        let b = logdet_f_n(&build_kernel(&g.swapped().unwrap(), pemc(t2), pemc(t1), xi, &disc).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "{a} {b}");
    }

    #[test]
    fn global_duality_random(x in 0.3f64..3.0, u in 0.0f64..0.25, d in 0.0f64..0.8, shift in 0.0f64..0.7, xi in 0.0f64..2.0) {
        let g = Geometry::from_x_u(x, u, 1.0).unwrap();
        let disc = Discretization { nodes: Some(24), ..Default::default() };
        let a = logdet_f_n(&build_kernel(&g, pemc(0.0), pemc(d), xi, &disc).unwrap()).unwrap();
        let b = logdet_f_n(&build_kernel(&g, pemc(shift), pemc(d + shift), xi, &disc).unwrap()).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300), "{a} {b}");
    }
}
