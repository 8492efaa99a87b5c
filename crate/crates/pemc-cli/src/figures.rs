//! Predefined data series for the `figure` subcommand, numbered 2 to 10.

use crate::output::{Cell, Dataset};
use pemc_core::analysis::{log_grid, phase_map, sumrule_integral, MapTarget, PhaseMapSpec};
use pemc_core::dipole::{dipole_dipole_critical_angle, dipole_dipole_free_energy, dipole_plane_free_energy};
use pemc_core::engine::{free_energy_deltas, Discretization, Geometry, ThermalState};
use pemc_core::hightemp::{rational_model, rational_table, single_roundtrip_high_t};
use pemc_core::pfa::{
    pfa_critical_angle, pfa_energy_t0, pfa_free_energy, pfa_high_t, pfa_low_t_correction, PfaInputs,
};
use pemc_core::specfun::zeta_int;
use pemc_core::{Error, Result};
use serde_json::json;
use std::f64::consts::PI;

pub const IDS: std::ops::RangeInclusive<u32> = 2..=10;

const Q: f64 = PI / 4.0;

fn figure_deltas() -> [f64; 4] {
    [PI / 5.0, 0.3 * PI, 0.4 * PI, PI / 2.0]
}

fn lin_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Sign change of f over delta in [0, pi/2] by bisection.
fn zero_in_delta(f: impl Fn(f64) -> Result<f64>) -> Result<Option<f64>> {
    let (mut a, mut b) = (0.0, PI / 2.0);
    let (fa, fb) = (f(a)?, f(b)?);
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if f(m)?.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(Some(0.5 * (a + b)))
}

pub fn figure(id: u32, points: usize, disc: &Discretization) -> Result<Dataset> {
    let n = points.max(2);
    let mut d = match id {
        2 => fig2(n)?,
        3 => fig3(n)?,
        4 => fig4(n, disc)?,
        5 => fig5(n)?,
        6 => fig6(n, disc)?,
        7 => fig7(n, disc)?,
        8 => map(n, disc, MapTarget::CriticalAngle, &[0.0, 0.25], &[], &[0.0, f64::INFINITY])?,
        9 => map(n, disc, MapTarget::ForceMap, &[0.0], &[0.95 * Q, 0.98 * Q], &[0.0, 0.1, 0.3, 1.0, f64::INFINITY])?,
        10 => map(n, disc, MapTarget::ForceMap, &[0.25], &[Q, 1.05 * Q], &[0.0, 0.1, 0.3, 1.0, f64::INFINITY])?,
        _ => return Err(Error::Invalid(format!("no figure {id}; choose 2 to 10"))),
    };
    d.meta("figure", json!(id));
    Ok(d)
}

/// Low-temperature PFA corrections at x = 1.
fn fig2(n: usize) -> Result<Dataset> {
    let mut d = Dataset::new(&["tau", "delta", "expansion_hbar_c", "matsubara_hbar_c", "expansion_kt", "matsubara_kt"]);
    d.meta("units", json!("hbar c / L at x = 1; kt columns in k_B T"));
    for delta in figure_deltas() {
        for tau in lin_grid(0.0, 1.0, n).into_iter().skip(1) {
            let p = PfaInputs::new(1.0, tau, delta, 0.0)?;
            let approx = pfa_low_t_correction(&p)?.value;
            let exact = pfa_free_energy(&p)?.hbar_c - pfa_energy_t0(1.0, delta)?;
            let kt = 2.0 * PI / tau;
            d.push(vec![tau.into(), delta.into(), approx.into(), exact.into(), (approx * kt).into(), (exact * kt).into()]);
        }
    }
    Ok(d)
}

/// PFA energy at tau in hbar c / L (k_B T for tau = infinity), x = 1.
fn pfa_energy(tau: f64, delta: f64) -> Result<f64> {
    if tau == 0.0 {
        pfa_energy_t0(1.0, delta)
    } else if tau.is_infinite() {
        pfa_high_t(1.0, delta)
    } else {
        Ok(pfa_free_energy(&PfaInputs::new(1.0, tau, delta, 0.0)?)?.hbar_c)
    }
}

/// PFA critical angle against temperature, with the angle of vanishing free energy.
fn fig3(n: usize) -> Result<Dataset> {
    let mut d = Dataset::new(&["tau", "delta_crit", "delta_zero_energy"]);
    d.meta("units", json!("angles in radians"));
    let mut taus = vec![0.0];
    taus.extend(log_grid(1e-2, 1e2, n));
    taus.push(f64::INFINITY);
    for tau in taus {
        let zero = zero_in_delta(|x| pfa_energy(tau, x))?;
        d.push(vec![tau.into(), pfa_critical_angle(tau)?.into(), zero.into()]);
    }
    Ok(d)
}

/// Beyond-PFA energy at T = 0 for a sphere and a plane, with the dipole asymptote.
fn fig4(n: usize, disc: &Discretization) -> Result<Dataset> {
    let mut d = Dataset::new(&["x", "delta", "energy", "pfa", "difference", "dipole"]);
    d.meta("units", json!("hbar c / L; sphere-plane, T = 0"));
    let ds = figure_deltas();
    for x in log_grid(0.02, 2.0, n) {
        let g = Geometry::from_x_u(x, 0.0, 1.0)?;
        let reps = free_energy_deltas(&g, &ds, ThermalState::zero(), disc)?;
        for (delta, rep) in ds.iter().zip(&reps) {
            let e = rep.free_energy.unwrap_or(f64::NAN);
            let pfa = pfa_energy_t0(x, *delta)?;
            let dip = dipole_plane_free_energy(g.r2(), g.script_l(), 0.0, *delta)? * g.l() / g.script_l();
            d.push(vec![x.into(), (*delta).into(), e.into(), pfa.into(), (e - pfa).into(), dip.into()]);
        }
    }
    Ok(d)
}

/// Dipole critical angle against the scaled temperature, with the angle of vanishing free energy.
fn fig5(n: usize) -> Result<Dataset> {
    let mut d = Dataset::new(&["tau_tilde", "delta_crit", "delta_zero_energy"]);
    d.meta("units", json!("angles in radians"));
    let mut taus = vec![0.0];
    taus.extend(log_grid(1e-2, 1e2, n));
    taus.push(f64::INFINITY);
    for tau in taus {
        // the angular dependence is frozen beyond tau_tilde ~ 1e2
        let te = if tau.is_infinite() { 1e4 } else { tau };
        let zero = zero_in_delta(|x| dipole_dipole_free_energy(1.0, 1.0, 10.0, te, x))?;
        d.push(vec![tau.into(), dipole_dipole_critical_angle(tau)?.into(), zero.into()]);
    }
    Ok(d)
}

/// High-temperature free energy over zeta(3) times its single round-trip part.
fn fig6(n: usize, disc: &Discretization) -> Result<Dataset> {
    let mut d = Dataset::new(&["y_minus_one", "u", "delta", "ratio", "rational_model"]);
    d.meta("units", json!("dimensionless"));
    let z3 = zeta_int(3);
    let ds: Vec<f64> = rational_table().iter().map(|r| r.delta).collect();
    for u in [0.0, 0.25] {
        for ym1 in log_grid(1e-2, 1e2, n) {
            let g = Geometry::from_y_minus_one(ym1, u, 1.0)?;
            let reps = free_energy_deltas(&g, &ds, ThermalState::high_temperature(), disc)?;
            for (row, rep) in rational_table().iter().zip(&reps) {
                let one = single_roundtrip_high_t(row.delta, 1.0 + ym1, u)?;
                let ratio = rep.free_energy_kt.unwrap_or(f64::NAN) / (z3 * one);
                let model = rational_model(row, 1.0 + ym1)? / z3;
                d.push(vec![ym1.into(), u.into(), row.delta.into(), ratio.into(), model.into()]);
            }
        }
    }
    Ok(d)
}

/// High-temperature sum rule scaled by y^3, with its large-distance limit.
fn fig7(n: usize, disc: &Discretization) -> Result<Dataset> {
    let mut d = Dataset::new(&["y_minus_one", "u", "y3_integral", "asymptote"]);
    d.meta("units", json!("script_L / k_B T times the delta integral of the force, times y^3"));
    for u in [0.0, 0.01, 0.05, 0.25] {
        for ym1 in log_grid(1e-1, 1e2, n) {
            let g = Geometry::from_y_minus_one(ym1, u, 1.0)?;
            let s = sumrule_integral(&g, ThermalState::high_temperature(), disc, 1e-6)?;
            let asym = if u > 0.0 { Cell::Num(-9.0 * PI / 64.0) } else { Cell::Empty };
            d.push(vec![ym1.into(), u.into(), s.y3_scaled.into(), asym]);
        }
    }
    Ok(d)
}

fn map(n: usize, disc: &Discretization, target: MapTarget, us: &[f64], deltas: &[f64], temps: &[f64]) -> Result<Dataset> {
    let mut d = Dataset::new(&["u", "x", "gap_over_thermal", "delta", "force", "ratio", "error"]);
    d.meta("units", json!("force in hbar c / L^2 (k_B T / L at infinite temperature); ratio to delta = 0"));
    for &u in us {
        let spec = PhaseMapSpec {
            u,
            temperatures: temps.to_vec(),
            x_grid: log_grid(0.05, 10.0, n),
            deltas: deltas.to_vec(),
            target,
            disc: disc.clone(),
        };
        for r in phase_map(&spec)? {
            d.push(vec![u.into(), r.x.into(), r.gap_over_thermal.into(), r.delta.into(), r.force.into(), r.ratio.into(), r.error.unwrap_or_default().into()]);
        }
    }
    Ok(d)
}
