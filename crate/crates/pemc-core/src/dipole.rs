//! Large-distance asymptotics: dipole-dipole and dipole-plane free energies at
//! arbitrary temperature, critical angles and the integral over delta.
//!
//! Free energies are in units of hbar c / script_l and forces in hbar c /
//! script_l^2, where script_l is the centre-to-centre distance (sphere-sphere)
//! or the centre-to-plane distance (sphere-plane). The temperature enters as
//! tau_tilde = 2 pi script_l / lambda_T.

use crate::error::{invalid, Result};
use crate::pfa::check_delta;
use crate::quad::brent;
use std::f64::consts::PI;

/// Channel functions of tau_tilde.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleThermalFunctions {
    pub f_pp: f64,
    pub f_pp_bar: f64,
    pub g_pp: f64,
    pub g_pp_bar: f64,
}

/// (g, c) = (tau / sinh tau, tau coth tau) and their tau-derivatives.
fn g_c(tau: f64) -> ([f64; 2], [f64; 2]) {
    if tau < 1e-3 {
        let t2 = tau * tau;
        let g = 1.0 - t2 / 6.0 + 7.0 * t2 * t2 / 360.0;
        let c = 1.0 + t2 / 3.0 - t2 * t2 / 45.0;
        let dg = -tau / 3.0 + 7.0 * tau * t2 / 90.0;
        let dc = 2.0 * tau / 3.0 - 4.0 * tau * t2 / 45.0;
        return ([g, c], [dg, dc]);
    }
    let g = if tau > 700.0 { 0.0 } else { tau / tau.sinh() };
    let c = tau / tau.tanh();
    ([g, c], [g * (1.0 - c) / tau, (c - g * g) / tau])
}

/// Polynomials in (g, c) with partial derivatives.
struct Poly {
    v: f64,
    dg: f64,
    dc: f64,
}

fn f_pp_poly(g: f64, c: f64) -> Poly {
    let g2 = g * g;
    let v = 6.0 * c + 6.0 * g2 + 5.0 * g2 * c + g2 * g2 + 2.0 * g2 * c * c + 2.0 * g2 * g2 * c + g2 * c * c * c;
    let dg = 12.0 * g + 10.0 * g * c + 4.0 * g2 * g + 4.0 * g * c * c + 8.0 * g2 * g * c + 2.0 * g * c * c * c;
    let dc = 6.0 + 5.0 * g2 + 4.0 * g2 * c + 2.0 * g2 * g2 + 3.0 * g2 * c * c;
    Poly { v: 0.625 * v, dg: 0.625 * dg, dc: 0.625 * dc }
}

fn f_pp_bar_poly(g: f64, c: f64) -> Poly {
    let g2 = g * g;
    let v = g2 * c + g2 * g2 + 2.0 * g2 * c * c + 2.0 * g2 * g2 * c + g2 * c * c * c;
    let dg = 2.0 * g * c + 4.0 * g2 * g + 4.0 * g * c * c + 8.0 * g2 * g * c + 2.0 * g * c * c * c;
    let dc = g2 + 4.0 * g2 * c + 2.0 * g2 * g2 + 3.0 * g2 * c * c;
    Poly { v: 0.5 * v, dg: 0.5 * dg, dc: 0.5 * dc }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau >= 0.0) || tau.is_infinite() {
        return invalid(format!("need finite tau_tilde >= 0, got {tau}"));
    }
    Ok(())
}

/// Channel functions at tau_tilde.
pub fn thermal_functions(tau: f64) -> Result<DipoleThermalFunctions> {
    check_tau(tau)?;
    let ([g, c], _) = g_c(tau);
    let g2 = g * g;
    Ok(DipoleThermalFunctions {
        f_pp: f_pp_poly(g, c).v,
        f_pp_bar: f_pp_bar_poly(g, c).v,
        g_pp: 3.0 / 16.0 * (2.0 * c + 2.0 * g2 + g2 * c),
        g_pp_bar: 3.0 / 16.0 * g2 * c,
    })
}

/// tau_tilde-derivatives of the channel functions.
pub fn thermal_functions_derivative(tau: f64) -> Result<DipoleThermalFunctions> {
    check_tau(tau)?;
    let ([g, c], [dg, dc]) = g_c(tau);
    let chain = |p: Poly| p.dg * dg + p.dc * dc;
    let g2 = g * g;
    Ok(DipoleThermalFunctions {
        f_pp: chain(f_pp_poly(g, c)),
        f_pp_bar: chain(f_pp_bar_poly(g, c)),
        g_pp: 3.0 / 16.0 * (2.0 * dc + 4.0 * g * dg + 2.0 * g * dg * c + g2 * dc),
        g_pp_bar: 3.0 / 16.0 * (2.0 * g * dg * c + g2 * dc),
    })
}

/// cos^2 delta (f + fbar) - sin^2 delta (4/5 f + 5/4 fbar)
fn dd_bracket(t: &DipoleThermalFunctions, delta: f64) -> f64 {
    let (s, c) = delta.sin_cos();
    c * c * (t.f_pp + t.f_pp_bar) - s * s * (0.8 * t.f_pp + 1.25 * t.f_pp_bar)
}

fn check_geometry(radii: &[f64], script_l: f64) -> Result<()> {
    if radii.iter().any(|r| !(*r > 0.0)) || !(script_l > 0.0) {
        return invalid("radii and distance must be positive");
    }
    Ok(())
}

/// Whether the dipole expansion is trustworthy: max(R)/script_l <= 0.2.
pub fn dipole_valid(max_radius: f64, script_l: f64) -> bool {
    max_radius / script_l <= 0.2
}

/// Dipole-dipole free energy, F script_l / (hbar c).
pub fn dipole_dipole_free_energy(r1: f64, r2: f64, script_l: f64, tau: f64, delta: f64) -> Result<f64> {
    check_geometry(&[r1, r2], script_l)?;
    check_delta(delta)?;
    let t = thermal_functions(tau)?;
    let s = (r1 * r2 / (script_l * script_l)).powi(3);
    Ok(-s / (2.0 * PI) * dd_bracket(&t, delta))
}

/// Dipole-dipole force at fixed radii and lambda_T, F script_l^2 / (hbar c).
pub fn dipole_dipole_force(r1: f64, r2: f64, script_l: f64, tau: f64, delta: f64) -> Result<f64> {
    check_geometry(&[r1, r2], script_l)?;
    check_delta(delta)?;
    let h = dd_bracket(&thermal_functions(tau)?, delta);
    let dh = dd_bracket(&thermal_functions_derivative(tau)?, delta);
    let s = (r1 * r2 / (script_l * script_l)).powi(3);
    Ok(s / (2.0 * PI) * (tau * dh - 7.0 * h))
}

/// Critical angle of the dipole-dipole force; tau = infinity is allowed.
pub fn dipole_dipole_critical_angle(tau: f64) -> Result<f64> {
    if tau.is_infinite() && tau > 0.0 {
        // F ~ tau [15/4 cos^2 - 3 sin^2]
        return brent(|d: f64| Ok(3.75 * d.cos().powi(2) - 3.0 * d.sin().powi(2)), 0.0, PI / 2.0, 1e-15, 200);
    }
    check_tau(tau)?;
    brent(|d| dipole_dipole_force(1.0, 1.0, 1.0, tau, d), 0.0, PI / 2.0, 1e-15, 200)
}

/// Dipole-plane free energy, F script_l / (hbar c).
pub fn dipole_plane_free_energy(r: f64, script_l: f64, tau: f64, delta: f64) -> Result<f64> {
    check_geometry(&[r], script_l)?;
    check_delta(delta)?;
    let t = thermal_functions(tau)?;
    Ok(-(r / script_l).powi(3) / (2.0 * PI) * (2.0 * delta).cos() * (t.g_pp + t.g_pp_bar))
}

/// Dipole-plane force at fixed radius and lambda_T, F script_l^2 / (hbar c).
pub fn dipole_plane_force(r: f64, script_l: f64, tau: f64, delta: f64) -> Result<f64> {
    check_geometry(&[r], script_l)?;
    check_delta(delta)?;
    let t = thermal_functions(tau)?;
    let dt = thermal_functions_derivative(tau)?;
    let h = t.g_pp + t.g_pp_bar;
    let dh = dt.g_pp + dt.g_pp_bar;
    Ok((r / script_l).powi(3) / (2.0 * PI) * (2.0 * delta).cos() * (tau * dh - 4.0 * h))
}

/// Closed-form integral of the dipole-dipole force over delta in [0, pi/2],
/// in units of hbar c (R1 R2)^3 / script_l^8.
pub fn sumrule_dipole_dipole(tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let ([g, c], _) = g_c(tau);
    let g2 = g * g;
    Ok(-(18.0 * c + 18.0 * g2 + 14.0 * g2 * c + 4.0 * g2 * c * c + 2.0 * g2 * g2) / 32.0)
}

/// High-temperature limit of the integral over delta, in units of
/// k_B T (R1 R2)^3 / script_l^7.
pub fn sumrule_dipole_dipole_high_t() -> f64 {
    -9.0 * PI / 8.0
}

/// Integral of the dipole-plane force over delta: exactly zero.
pub fn sumrule_dipole_plane() -> f64 {
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::gauss_legendre_on;
    use approx::assert_relative_eq;

    #[test]
    fn zero_temperature_values() {
        let t = thermal_functions(0.0).unwrap();
        assert_relative_eq!(t.f_pp, 115.0 / 8.0, max_relative = 1e-15);
        assert_relative_eq!(t.f_pp_bar, 3.5, max_relative = 1e-15);
        assert_relative_eq!(t.g_pp, 15.0 / 16.0, max_relative = 1e-15);
        assert_relative_eq!(t.g_pp_bar, 3.0 / 16.0, max_relative = 1e-15);
    }

    #[test]
    fn high_temperature_slopes() {
        let tau = 80.0;
        let t = thermal_functions(tau).unwrap();
        assert_relative_eq!(t.f_pp / tau, 3.75, max_relative = 1e-12);
        assert_relative_eq!(t.g_pp / tau, 0.375, max_relative = 1e-12);
        assert!(t.f_pp_bar < 1e-25 && t.g_pp_bar < 1e-25);
    }

    #[test]
    fn hyperbolic_form_at_one() {
        // direct evaluation of the hyperbolic polynomials
        let tau = 1.0f64;
        let g = tau / tau.sinh();
        let ch = tau.cosh();
        let f = 0.625
            * (6.0 * g * ch + 6.0 * g * g + 5.0 * g.powi(3) * ch + g.powi(4) * (1.0 + 2.0 * ch * ch) + g.powi(5) * ch * (2.0 + ch * ch));
        let fb = 0.5 * (g.powi(3) * ch + g.powi(4) * (1.0 + 2.0 * ch * ch) + g.powi(5) * ch * (2.0 + ch * ch));
        let t = thermal_functions(tau).unwrap();
        assert_relative_eq!(t.f_pp, f, max_relative = 1e-13);
        assert_relative_eq!(t.f_pp_bar, fb, max_relative = 1e-13);
        assert_relative_eq!(t.g_pp, 3.0 / 16.0 * (2.0 * g * ch + 2.0 * g * g + g.powi(3) * ch), max_relative = 1e-13);
    }

    #[test]
    fn derivatives_match_differences() {
        for tau in [0.0005f64, 0.01, 0.3, 1.0, 4.0, 12.0] {
            let h = 1e-5 * tau.max(1e-2);
            let p = thermal_functions(tau + h).unwrap();
            let m = thermal_functions((tau - h).max(0.0)).unwrap();
            let span = tau + h - (tau - h).max(0.0);
            let d = thermal_functions_derivative(tau).unwrap();
            for (a, b, c) in [
                (p.f_pp, m.f_pp, d.f_pp),
                (p.f_pp_bar, m.f_pp_bar, d.f_pp_bar),
                (p.g_pp, m.g_pp, d.g_pp),
                (p.g_pp_bar, m.g_pp_bar, d.g_pp_bar),
            ] {
                let fd = (a - b) / span;
                assert!((fd - c).abs() < 1e-6 * (1.0 + c.abs()), "tau={tau} fd={fd} an={c}");
            }
        }
    }

    #[test]
    fn zero_temperature_energy() {
        for delta in [0.0, 0.3, 1.1, PI / 2.0] {
            let f = dipole_dipole_free_energy(1.0, 1.0, 10.0, 0.0, delta).unwrap();
            let e = -(8.0 + 135.0 * (2.0 * delta).cos()) / (16.0 * PI) * 1e-6;
            assert_relative_eq!(f, e, max_relative = 1e-13);
        }
        let f = dipole_dipole_free_energy(1.0, 1.0, 1.0, 0.0, PI / 2.0).unwrap();
        assert_relative_eq!(f, 127.0 / (16.0 * PI), max_relative = 1e-13);
    }

    #[test]
    fn high_temperature_energy() {
        let tau = 200.0;
        for delta in [0.0, 0.7, PI / 2.0] {
            // k_B T = hbar c tau / (2 pi script_l)
            let f = dipole_dipole_free_energy(1.0, 1.0, 1.0, tau, delta).unwrap() / (tau / (2.0 * PI));
            assert_relative_eq!(f, -3.0 / 8.0 * (1.0 + 9.0 * (2.0 * delta).cos()), max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn critical_angle_endpoints() {
        assert_relative_eq!(dipole_dipole_critical_angle(0.0).unwrap(), 0.5 * (-8.0f64 / 135.0).acos(), epsilon = 1e-10);
        assert_relative_eq!(dipole_dipole_critical_angle(f64::INFINITY).unwrap(), 0.5 * (-1.0f64 / 9.0).acos(), epsilon = 1e-10);
        assert_relative_eq!(dipole_dipole_critical_angle(300.0).unwrap(), 0.5 * (-1.0f64 / 9.0).acos(), epsilon = 1e-8);
        assert_relative_eq!(dipole_dipole_critical_angle(0.0).unwrap() / (PI / 4.0), 1.037, epsilon = 1e-3);
    }

    #[test]
    fn critical_angle_increases_with_temperature() {
        let mut prev = dipole_dipole_critical_angle(0.0).unwrap();
        for k in 1..40 {
            let d = dipole_dipole_critical_angle(0.25 * k as f64).unwrap();
            assert!(d >= prev - 1e-12);
            prev = d;
        }
        // midpoint of the transition near k_B T ~ 0.8 hbar c / script_l
        let lo = dipole_dipole_critical_angle(0.0).unwrap();
        let hi = dipole_dipole_critical_angle(f64::INFINITY).unwrap();
        let mid = dipole_dipole_critical_angle(2.0 * PI * 0.8).unwrap();
        assert!(mid > lo + 0.2 * (hi - lo) && mid < lo + 0.8 * (hi - lo));
    }

    #[test]
    fn closed_form_tan_squared() {
        for tau in [0.2, 1.0, 3.0] {
            let t = thermal_functions(tau).unwrap();
            let d = thermal_functions_derivative(tau).unwrap();
            let p = 7.0 * (t.f_pp + t.f_pp_bar) - tau * (d.f_pp + d.f_pp_bar);
            let q = 7.0 * (0.8 * t.f_pp + 1.25 * t.f_pp_bar) - tau * (0.8 * d.f_pp + 1.25 * d.f_pp_bar);
            assert_relative_eq!(dipole_dipole_critical_angle(tau).unwrap(), (p / q).sqrt().atan(), epsilon = 1e-12);
        }
    }

    #[test]
    fn dipole_plane_values() {
        for tau in [0.0, 0.5, 7.0] {
            assert!(dipole_plane_free_energy(1.0, 8.0, tau, PI / 4.0).unwrap().abs() < 1e-18);
            let a = dipole_plane_free_energy(1.0, 8.0, tau, PI / 6.0).unwrap();
            let b = dipole_plane_free_energy(1.0, 8.0, tau, PI / 3.0).unwrap();
            assert_relative_eq!(a, -b, max_relative = 1e-14);
        }
        assert_relative_eq!(dipole_plane_free_energy(1.0, 1.0, 0.0, 0.0).unwrap(), -9.0 / (16.0 * PI), max_relative = 1e-14);
    }

    #[test]
    fn sum_rule_endpoints() {
        assert_relative_eq!(sumrule_dipole_dipole(0.0).unwrap(), -1.75, max_relative = 1e-14);
        let tau = 300.0;
        // divide by k_B T script_l / (hbar c) = tau / (2 pi)
        assert_relative_eq!(sumrule_dipole_dipole(tau).unwrap() / (tau / (2.0 * PI)), -9.0 * PI / 8.0, max_relative = 1e-12);
        for k in 0..=50 {
            assert!(sumrule_dipole_dipole(k as f64).unwrap() < 0.0);
        }
    }

    #[test]
    fn sum_rule_matches_quadrature() {
        let (x, w) = gauss_legendre_on(32, 0.0, PI / 2.0);
        for tau in [0.0, 0.7, 3.0] {
            let q: f64 = x.iter().zip(&w).map(|(d, w)| w * dipole_dipole_force(1.0, 1.0, 1.0, tau, *d).unwrap()).sum();
            assert_relative_eq!(q, sumrule_dipole_dipole(tau).unwrap(), max_relative = 1e-12);
            let qp: f64 = x.iter().zip(&w).map(|(d, w)| w * dipole_plane_force(1.0, 1.0, tau, *d).unwrap()).sum();
            assert!(qp.abs() < 1e-14);
        }
        assert_eq!(sumrule_dipole_plane(), 0.0);
    }

    #[test]
    fn sign_flips_once() {
        for tau in [0.0, 1.0, 5.0] {
            let mut flips = 0;
            let mut prev = dipole_dipole_free_energy(1.0, 1.0, 1.0, tau, 0.0).unwrap();
            for k in 1..=200 {
                let f = dipole_dipole_free_energy(1.0, 1.0, 1.0, tau, k as f64 * PI / 400.0).unwrap();
                if f.signum() != prev.signum() {
                    flips += 1;
                }
                prev = f;
            }
            assert_eq!(flips, 1);
        }
    }
}
