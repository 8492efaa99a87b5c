//! Proximity-force approximation: Matsubara terms, zero-temperature energy,
//! low-temperature expansion, high-temperature limit, critical angles and the
//! leading curvature correction.
//!
//! Energies are returned in units of hbar c / L unless stated otherwise; the
//! temperature enters as tau = 2 pi L / lambda_T.

use crate::error::{invalid, Error, Result};
use crate::quad::brent;
use crate::specfun::{polylog_disk, re_polylog_circle};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfaInputs {
    pub x: f64,
    pub tau: f64,
    pub delta: f64,
    pub u: f64,
}

impl PfaInputs {
    pub fn new(x: f64, tau: f64, delta: f64, u: f64) -> Result<Self> {
        let p = Self { x, tau, delta, u };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        if !(self.x > 0.0) {
            return invalid(format!("need x > 0, got {}", self.x));
        }
        if !(self.tau >= 0.0) {
            return invalid(format!("need tau >= 0, got {}", self.tau));
        }
        check_delta(self.delta)?;
        if !(0.0..=0.25).contains(&self.u) {
            return invalid(format!("need 0 <= u <= 1/4, got {}", self.u));
        }
        Ok(())
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=PI / 2.0 + 1e-12).contains(&delta) {
        return invalid(format!("need 0 <= delta <= pi/2, got {delta}"));
    }
    Ok(())
}

/// A value together with validity warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub warnings: Vec<String>,
}

/// Re Li_s(e^{2 i delta - 2 n tau}).
fn re_li(s: u32, n: usize, tau: f64, delta: f64) -> Result<f64> {
    if n == 0 || tau == 0.0 {
        return re_polylog_circle(s, 2.0 * delta);
    }
    let z = Complex64::from_polar((-2.0 * n as f64 * tau).exp(), 2.0 * delta);
    Ok(polylog_disk(s, z)?.re)
}

/// f_{n,PFA} = -(1/2x) Re Li_3(e^{2 i delta - 2 n tau}).
pub fn pfa_f_n(n: usize, p: &PfaInputs) -> Result<f64> {
    p.check()?;
    Ok(-re_li(3, n, p.tau, p.delta)? / (2.0 * p.x))
}

/// pi^4 - 30 delta^2 (pi - delta)^2
fn energy_bracket(delta: f64) -> f64 {
    let d = delta * (PI - delta);
    PI.powi(4) - 30.0 * d * d
}

/// Zero-temperature PFA energy.
pub fn pfa_energy_t0(x: f64, delta: f64) -> Result<f64> {
    if !(x > 0.0) {
        return invalid(format!("need x > 0, got {x}"));
    }
    check_delta(delta)?;
    Ok(-energy_bracket(delta) / (720.0 * PI * x))
}

/// Matsubara-summed PFA free energy.
#[derive(Debug, Clone, PartialEq)]
pub struct PfaFreeEnergy {
    /// F L / (hbar c)
    pub hbar_c: f64,
    /// F / (k_B T)
    pub k_bt: f64,
    pub terms: usize,
}

/// Sum f0/2 + sum_{n>=1} g(n) until the terms fall below `tol` relative to
/// the largest one, with a geometric tail estimate.
fn matsubara_sum<G: FnMut(usize) -> Result<f64>>(mut g: G, tau: f64, tol: f64) -> Result<(f64, usize)> {
    let f0 = g(0)?;
    let mut sum = 0.5 * f0;
    let mut scale = f0.abs();
    let mut small = 0;
    let q = (-2.0 * tau).exp();
    let max_terms = (60.0 / tau).ceil() as usize + 100;
    for n in 1..=max_terms {
        let f = g(n)?;
        sum += f;
        scale = scale.max(f.abs());
        if f.abs() < tol * scale {
            small += 1;
            if small >= 3 {
                sum += f * q / (1.0 - q);
                return Ok((sum, n));
            }
        } else {
            small = 0;
        }
    }
    Err(Error::NoConvergence(format!("Matsubara sum did not converge in {max_terms} terms (tau = {tau})")))
}

/// PFA free energy at tau > 0.
pub fn pfa_free_energy(p: &PfaInputs) -> Result<PfaFreeEnergy> {
    p.check()?;
    if p.tau == 0.0 {
        return invalid("pfa_free_energy needs tau > 0; use pfa_energy_t0");
    }
    let (s, terms) = matsubara_sum(|n| pfa_f_n(n, p), p.tau, 1e-15)?;
    Ok(PfaFreeEnergy { hbar_c: p.tau / (2.0 * PI) * s, k_bt: s, terms })
}

/// Low-temperature correction to the PFA energy (leading tau^2 and tau^4 terms).
pub fn pfa_low_t_correction(p: &PfaInputs) -> Result<Estimate> {
    p.check()?;
    let mut warnings = Vec::new();
    if p.tau > 0.5 {
        warnings.push(format!("tau = {} is outside the low-temperature regime", p.tau));
    }
    if p.delta == 0.0 {
        warnings.push("expansion holds for delta > 0; using the Matsubara sum".into());
        let value = if p.tau == 0.0 {
            0.0
        } else {
            pfa_free_energy(p)?.hbar_c - pfa_energy_t0(p.x, 0.0)?
        };
        return Ok(Estimate { value, warnings });
    }
    let t2 = p.tau * p.tau;
    let value = -(5.0 * (PI * PI - 6.0 * p.delta * (PI - p.delta)) * t2 + t2 * t2) / (720.0 * PI * p.x);
    Ok(Estimate { value, warnings })
}

/// High-temperature PFA free energy in units of k_B T.
pub fn pfa_high_t(x: f64, delta: f64) -> Result<f64> {
    if !(x > 0.0) {
        return invalid(format!("need x > 0, got {x}"));
    }
    check_delta(delta)?;
    Ok(-re_polylog_circle(3, 2.0 * delta)? / (4.0 * x))
}

/// Quantity proportional to minus the PFA force at fixed lambda_T:
/// sum' [Re Li_3(q_n) + 2 n tau Re Li_2(q_n)], q_n = e^{2 i delta - 2 n tau}.
/// Attraction for positive values.
pub fn pfa_force_bracket(tau: f64, delta: f64) -> Result<f64> {
    if tau == 0.0 {
        return Ok(energy_bracket(delta));
    }
    let (s, _) = matsubara_sum(
        |n| Ok(re_li(3, n, tau, delta)? + 2.0 * n as f64 * tau * if n == 0 { 0.0 } else { re_li(2, n, tau, delta)? }),
        tau,
        1e-15,
    )?;
    Ok(s)
}

/// Critical angle of the PFA force at temperature tau; tau = infinity is allowed.
pub fn pfa_critical_angle(tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return invalid(format!("need tau >= 0, got {tau}"));
    }
    if tau == 0.0 {
        return Ok((1.0 - (1.0 - 2.0 * (2.0f64 / 15.0).sqrt()).sqrt()) * PI / 2.0);
    }
    let f = |d: f64| -> Result<f64> {
        if tau.is_infinite() {
            re_polylog_circle(3, 2.0 * d)
        } else {
            pfa_force_bracket(tau, d)
        }
    };
    brent(f, 0.85 * PI / 4.0, 1.0 * PI / 4.0, 1e-14, 200)
}

/// Leading curvature correction to the zero-temperature PFA energy.
pub fn pfa_geometric_correction(x: f64, u: f64, delta: f64) -> Result<f64> {
    PfaInputs::new(x, 0.0, delta, u)?;
    let d = delta * (PI - delta);
    Ok((20.0 * (PI * PI - 6.0 * d) - (1.0 - 3.0 * u) / 3.0 * energy_bracket(delta)) / (720.0 * PI))
}
