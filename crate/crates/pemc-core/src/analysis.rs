//! Critical angles, equilibrium distances, the sum-rule integral over the
//! duality angle and tabulated phase maps, built on the engine and the
//! asymptotic models.

use crate::dipole;
use crate::engine::{force_deltas, Discretization, ForceReport, Geometry, ThermalState};
use crate::error::{invalid, Error, Result};
use crate::pfa;
use crate::quad::{brent, gauss_legendre_on};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Number of points of the sign scan in delta.
pub const DELTA_SCAN_POINTS: usize = 16;

/// Logarithmically spaced grid with `n >= 2` points from `a` to `b`.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Default x grid for equilibrium scans.
pub fn default_x_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 25)
}

fn delta_scan() -> Vec<f64> {
    let n = DELTA_SCAN_POINTS;
    (0..n).map(|i| 0.5 * PI * i as f64 / (n - 1) as f64).collect()
}

/// Force in hbar c / L^2, or in k_B T / L in the high-temperature limit.
fn force_value(r: &ForceReport) -> f64 {
    r.force.or(r.force_kt).unwrap_or(f64::NAN)
}

/// Brackets [a_i, a_{i+1}] on which `f` changes sign; an exact zero at a grid
/// point yields a degenerate bracket.
fn sign_brackets(xs: &[f64], fs: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 0..xs.len() {
        if fs[i] == 0.0 {
            out.push((xs[i], xs[i]));
        } else if i + 1 < xs.len() && fs[i + 1] != 0.0 && fs[i].signum() != fs[i + 1].signum() {
            out.push((xs[i], xs[i + 1]));
        }
    }
    out
}

fn check_finite(fs: &[f64], what: &str) -> Result<()> {
    if fs.iter().any(|f| !f.is_finite()) {
        return Err(Error::NoConvergence(format!("non-finite force in {what}")));
    }
    Ok(())
}

/// Critical duality angle at which the force between a PEC first body and the
/// second body vanishes, for aspect ratio x, geometry parameter u and
/// temperature. `None` when the force keeps one sign on [0, pi/2].
pub fn critical_angle(x: f64, u: f64, thermal: ThermalState, disc: &Discretization) -> Result<Option<f64>> {
    critical_angle_in(&Geometry::from_x_u(x, u, 1.0)?, thermal, disc)
}

pub fn critical_angle_in(geom: &Geometry, thermal: ThermalState, disc: &Discretization) -> Result<Option<f64>> {
    let ds = delta_scan();
    let fs: Vec<f64> = force_deltas(geom, &ds, thermal, disc)?.iter().map(force_value).collect();
    check_finite(&fs, "critical-angle scan")?;
    let br = sign_brackets(&ds, &fs);
    match br.len() {
        0 => Ok(None),
        1 => {
            let (a, b) = br[0];
            if a == b {
                return Ok(Some(a));
            }
            let root = brent(|d| Ok(force_value(&force_deltas(geom, &[d], thermal, disc)?[0])), a, b, 1e-7, 60)?;
            Ok(Some(root))
        }
        _ => Err(Error::Ambiguous(format!("force changes sign on several delta brackets: {br:?}"))),
    }
}

/// How temperature is held fixed along an x scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThermalScan {
    /// Fixed L / lambda_T, so tau is the same at every x.
    Row(ThermalState),
    /// Fixed lambda_T / R_eff, so L / lambda_T = x / ratio varies along the scan.
    FixedThermalLength(f64),
}

impl ThermalScan {
    /// Fixed L / lambda_T; zero and infinity select the limits.
    pub fn row(l_over_lambda: f64) -> Result<Self> {
        if l_over_lambda.is_infinite() {
            return Ok(Self::Row(ThermalState::high_temperature()));
        }
        Ok(Self::Row(ThermalState::from_gap_over_thermal(l_over_lambda)?))
    }

    pub fn thermal_at(&self, x: f64) -> Result<ThermalState> {
        match *self {
            Self::Row(t) => Ok(t),
            Self::FixedThermalLength(r) => {
                if !(r > 0.0) {
                    return invalid(format!("lambda_T / R_eff must be positive, got {r}"));
                }
                ThermalState::from_gap_over_thermal(x / r)
            }
        }
    }

    /// L / lambda_T at aspect ratio x.
    pub fn gap_over_thermal(&self, x: f64) -> f64 {
        match *self {
            Self::Row(t) => t.tau() / (2.0 * PI),
            Self::FixedThermalLength(r) => x / r,
        }
    }
}

/// A zero of the force in x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub x: f64,
    /// L / lambda_T at the zero
    pub gap_over_thermal: f64,
    /// repulsion at smaller and attraction at larger x
    pub stable: bool,
}

fn force_at_x(x: f64, delta: f64, u: f64, scan: ThermalScan, disc: &Discretization) -> Result<f64> {
    let g = Geometry::from_x_u(x, u, 1.0)?;
    Ok(force_value(&force_deltas(&g, &[delta], scan.thermal_at(x)?, disc)?[0]))
}

/// Force zero in x on the given increasing grid. Every sign change is refined;
/// the stable crossing is returned when there is exactly one, otherwise the
/// single unstable crossing. `None` when the force keeps one sign.
pub fn equilibrium_distance(
    delta: f64,
    u: f64,
    scan: ThermalScan,
    x_grid: &[f64],
    disc: &Discretization,
) -> Result<Option<Equilibrium>> {
    pick_equilibrium(equilibrium_crossings(delta, u, scan, x_grid, disc)?)
}

fn pick_equilibrium(all: Vec<Equilibrium>) -> Result<Option<Equilibrium>> {
    let stable: Vec<&Equilibrium> = all.iter().filter(|e| e.stable).collect();
    match (stable.len(), all.len()) {
        (_, 0) => Ok(None),
        (1, _) => Ok(Some(*stable[0])),
        (0, 1) => Ok(Some(all[0])),
        _ => Err(Error::Ambiguous(format!("several force zeros in x: {all:?}"))),
    }
}

/// All force zeros in x on the grid, refined, in increasing order.
pub fn equilibrium_crossings(
    delta: f64,
    u: f64,
    scan: ThermalScan,
    x_grid: &[f64],
    disc: &Discretization,
) -> Result<Vec<Equilibrium>> {
    pfa::check_delta(delta)?;
    if x_grid.len() < 2 || !strictly_increasing(x_grid) || !(x_grid[0] > 0.0) {
        return invalid("x grid must be positive and strictly increasing with at least two points");
    }
    let fs = x_grid
        .iter()
        .map(|&x| force_at_x(x, delta, u, scan, disc))
        .collect::<Result<Vec<f64>>>()?;
    check_finite(&fs, "equilibrium scan")?;
    sign_brackets(x_grid, &fs)
        .into_iter()
        .map(|(a, b)| {
            let i = x_grid.iter().position(|&g| g == a).unwrap();
            let (x, left, right) = if a < b {
                let x = brent(|t| force_at_x(t.exp(), delta, u, scan, disc), a.ln(), b.ln(), 1e-7, 60)?.exp();
                (x, fs[i], fs[i + 1])
            } else {
                let l = if i > 0 { fs[i - 1] } else { f64::NAN };
                (a, l, fs.get(i + 1).copied().unwrap_or(f64::NAN))
            };
            Ok(Equilibrium {
                x,
                gap_over_thermal: scan.gap_over_thermal(x),
                stable: left > 0.0 && right < 0.0,
            })
        })
        .collect()
}

/// Force as a function of the duality angle of the second body.
pub trait ForceModel {
    /// Forces at the given angles, all in one unit.
    fn forces(&self, deltas: &[f64]) -> Result<Vec<f64>>;
}

/// Scattering-engine force, in hbar c / L^2 (k_B T / L in the high-temperature limit).
#[derive(Debug, Clone)]
pub struct EngineForce {
    pub geom: Geometry,
    pub thermal: ThermalState,
    pub disc: Discretization,
}

impl ForceModel for EngineForce {
    fn forces(&self, deltas: &[f64]) -> Result<Vec<f64>> {
        Ok(force_deltas(&self.geom, deltas, self.thermal, &self.disc)?.iter().map(force_value).collect())
    }
}

/// Proximity-force force, in hbar c / L^2 (k_B T / L in the high-temperature limit).
#[derive(Debug, Clone, Copy)]
pub struct PfaForce {
    pub x: f64,
    pub thermal: ThermalState,
}

impl ForceModel for PfaForce {
    fn forces(&self, deltas: &[f64]) -> Result<Vec<f64>> {
        let tau = self.thermal.tau();
        deltas
            .iter()
            .map(|&d| {
                if self.thermal.is_zero() {
                    Ok(2.0 * pfa::pfa_energy_t0(self.x, d)?)
                } else if self.thermal.is_high_temperature() {
                    pfa::pfa_high_t(self.x, d)
                } else {
                    pfa::check_delta(d)?;
                    Ok(-tau * pfa::pfa_force_bracket(tau, d)? / (4.0 * PI * self.x))
                }
            })
            .collect()
    }
}

/// Dipole force, in hbar c / script_L^2; `r1 = None` is a plane.
#[derive(Debug, Clone, Copy)]
pub struct DipoleForce {
    pub r1: Option<f64>,
    pub r2: f64,
    pub script_l: f64,
    pub tau_tilde: f64,
}

impl ForceModel for DipoleForce {
    fn forces(&self, deltas: &[f64]) -> Result<Vec<f64>> {
        deltas
            .iter()
            .map(|&d| match self.r1 {
                Some(r1) => dipole::dipole_dipole_force(r1, self.r2, self.script_l, self.tau_tilde, d),
                None => dipole::dipole_plane_force(self.r2, self.script_l, self.tau_tilde, d),
            })
            .collect()
    }
}

/// Integral of the force over delta in [0, pi/2].
#[derive(Debug, Clone, PartialEq)]
pub struct SumRuleQuadrature {
    /// 64-point value in the unit of the model
    pub integral: f64,
    /// |I_32 - I_64|
    pub error: f64,
    /// largest |F| met on the sign scan
    pub peak: f64,
    /// subdivision point inside the sign-change bracket
    pub split: Option<f64>,
}

fn split_rule(n: usize, split: Option<f64>) -> (Vec<f64>, Vec<f64>) {
    match split {
        None => gauss_legendre_on(n, 0.0, 0.5 * PI),
        Some(s) => {
            let (mut x, mut w) = gauss_legendre_on(n / 2, 0.0, s);
            let (x2, w2) = gauss_legendre_on(n / 2, s, 0.5 * PI);
            x.extend(x2);
            w.extend(w2);
            (x, w)
        }
    }
}

/// Gauss-Legendre integral over delta, split at the sign change of the force.
/// Fails when the 32- and 64-point values differ by more than `tol` times the peak force.
pub fn sumrule_quadrature<M: ForceModel + ?Sized>(model: &M, tol: f64) -> Result<SumRuleQuadrature> {
    let ds = delta_scan();
    let fs = model.forces(&ds)?;
    check_finite(&fs, "sum-rule scan")?;
    let peak = fs.iter().fold(0.0f64, |m, f| m.max(f.abs()));
    let br: Vec<(f64, f64)> = sign_brackets(&ds, &fs).into_iter().filter(|(a, b)| a < b).collect();
    let split = (br.len() == 1).then(|| 0.5 * (br[0].0 + br[0].1));
    let (x32, w32) = split_rule(32, split);
    let (x64, w64) = split_rule(64, split);
    let mut all = x32.clone();
    all.extend_from_slice(&x64);
    let f = model.forces(&all)?;
    check_finite(&f, "sum-rule quadrature")?;
    let i32: f64 = w32.iter().zip(&f[..32]).map(|(w, v)| w * v).sum();
    let i64: f64 = w64.iter().zip(&f[32..]).map(|(w, v)| w * v).sum();
    let error = (i32 - i64).abs();
    if error > tol * peak {
        return Err(Error::NoConvergence(format!(
            "sum-rule quadrature: 32-point {i32:e} vs 64-point {i64:e}"
        )));
    }
    Ok(SumRuleQuadrature {
        integral: i64,
        error,
        peak,
        split,
    })
}

/// Sum-rule integral from the scattering engine.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRule {
    /// integral of F over delta: hbar c / L^2, or k_B T / L in the high-temperature limit
    pub quadrature: SumRuleQuadrature,
    /// (script_L / k_B T) times the integral, high-temperature limit only
    pub scaled_integral: Option<f64>,
    /// y^3 times `scaled_integral`
    pub y3_scaled: Option<f64>,
}

pub fn sumrule_integral(geom: &Geometry, thermal: ThermalState, disc: &Discretization, tol: f64) -> Result<SumRule> {
    let model = EngineForce {
        geom: *geom,
        thermal,
        disc: disc.clone(),
    };
    let quadrature = sumrule_quadrature(&model, tol)?;
    let scaled = thermal
        .is_high_temperature()
        .then(|| quadrature.integral * geom.script_l() / geom.l());
    Ok(SumRule {
        y3_scaled: scaled.map(|s| geom.y().powi(3) * s),
        scaled_integral: scaled,
        quadrature,
    })
}

/// What a phase map tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapTarget {
    /// delta_crit per (x, temperature)
    CriticalAngle,
    /// x_eq per (delta, temperature), scanning the x grid
    Equilibrium,
    /// F and F / F(delta = 0) per (x, temperature, delta)
    ForceMap,
    /// integral over delta per (x, temperature)
    SumRule,
}

/// Grid specification; temperatures are L / lambda_T with 0 and infinity allowed.
#[derive(Debug, Clone)]
pub struct PhaseMapSpec {
    pub u: f64,
    pub temperatures: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub deltas: Vec<f64>,
    pub target: MapTarget,
    pub disc: Discretization,
}

/// One map row. Undetermined values are NaN; failed cells carry the error.
#[derive(Debug, Clone, PartialEq)]
pub struct MapRecord {
    pub x: f64,
    pub gap_over_thermal: f64,
    pub delta: f64,
    pub force: f64,
    pub ratio: f64,
    pub error: Option<String>,
}

impl MapRecord {
    fn blank(x: f64, t: f64, delta: f64) -> Self {
        Self {
            x,
            gap_over_thermal: t,
            delta,
            force: f64::NAN,
            ratio: f64::NAN,
            error: None,
        }
    }

    fn failed(mut self, e: &Error) -> Self {
        self.error = Some(e.to_string());
        self
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl PhaseMapSpec {
    fn validate(&self) -> Result<()> {
        if !(0.0..=0.25).contains(&self.u) {
            return invalid(format!("u must lie in [0, 1/4], got {}", self.u));
        }
        if !strictly_increasing(&self.temperatures) || self.temperatures.iter().any(|t| !(*t >= 0.0)) {
            return invalid("temperatures must be non-negative and strictly increasing");
        }
        if !strictly_increasing(&self.x_grid) || self.x_grid.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return invalid("x grid must be positive and strictly increasing");
        }
        if !strictly_increasing(&self.deltas) {
            return invalid("delta grid must be strictly increasing");
        }
        for &d in &self.deltas {
            pfa::check_delta(d)?;
        }
        let needs_x = self.target != MapTarget::Equilibrium;
        let needs_delta = matches!(self.target, MapTarget::Equilibrium | MapTarget::ForceMap);
        if self.temperatures.is_empty() || (needs_x && self.x_grid.is_empty()) || (needs_delta && self.deltas.is_empty()) {
            return invalid("phase map grids are empty");
        }
        Ok(())
    }
}

fn row_state(t: f64) -> Result<ThermalState> {
    match ThermalScan::row(t)? {
        ThermalScan::Row(s) => Ok(s),
        ThermalScan::FixedThermalLength(_) => unreachable!(),
    }
}

fn map_cell(spec: &PhaseMapSpec, x: f64, t: f64) -> Vec<MapRecord> {
    let go = || -> Result<Vec<MapRecord>> {
        let thermal = row_state(t)?;
        let geom = Geometry::from_x_u(x, spec.u, 1.0)?;
        match spec.target {
            MapTarget::CriticalAngle => {
                let d = critical_angle_in(&geom, thermal, &spec.disc)?;
                let mut r = MapRecord::blank(x, t, d.unwrap_or(f64::NAN));
                if d.is_some() {
                    r.force = 0.0;
                    r.ratio = 0.0;
                }
                Ok(vec![r])
            }
            MapTarget::ForceMap => {
                let mut ds = vec![0.0];
                ds.extend(spec.deltas.iter().filter(|&&d| d != 0.0));
                let fs: Vec<f64> = force_deltas(&geom, &ds, thermal, &spec.disc)?.iter().map(force_value).collect();
                Ok(spec
                    .deltas
                    .iter()
                    .map(|&d| {
                        let f = if d == 0.0 { fs[0] } else { fs[ds.iter().position(|&v| v == d).unwrap()] };
                        let mut r = MapRecord::blank(x, t, d);
                        r.force = f;
                        r.ratio = f / fs[0];
                        r
                    })
                    .collect())
            }
            MapTarget::SumRule => {
                let s = sumrule_integral(&geom, thermal, &spec.disc, 1e-6)?;
                let mut r = MapRecord::blank(x, t, f64::NAN);
                r.force = s.y3_scaled.unwrap_or(s.quadrature.integral);
                Ok(vec![r])
            }
            MapTarget::Equilibrium => unreachable!(),
        }
    };
    go().unwrap_or_else(|e| {
        let d = if spec.target == MapTarget::ForceMap { spec.deltas.clone() } else { vec![f64::NAN] };
        d.into_iter().map(|d| MapRecord::blank(x, t, d).failed(&e)).collect()
    })
}

/// Tabulate the requested target over the grids. Cells are evaluated in
/// parallel; rows come out temperature-major in grid order, and a failing cell
/// is recorded without aborting the map.
pub fn phase_map(spec: &PhaseMapSpec) -> Result<Vec<MapRecord>> {
    spec.validate()?;
    let rows: Vec<Vec<MapRecord>> = if spec.target == MapTarget::Equilibrium {
        let cells: Vec<(f64, f64)> = spec.temperatures.iter().flat_map(|&t| spec.deltas.iter().map(move |&d| (t, d))).collect();
        cells
            .par_iter()
            .map(|&(t, d)| {
                let res = ThermalScan::row(t).and_then(|s| equilibrium_distance(d, spec.u, s, &spec.x_grid, &spec.disc));
                let mut r = MapRecord::blank(f64::NAN, t, d);
                match res {
                    Ok(Some(eq)) => {
                        r.x = eq.x;
                        r.force = 0.0;
                        r.ratio = 0.0;
                        if !eq.stable {
                            r.error = Some("unstable crossing".into());
                        }
                        vec![r]
                    }
                    Ok(None) => vec![r],
                    Err(e) => vec![r.failed(&e)],
                }
            })
            .collect()
    } else {
        let cells: Vec<(f64, f64)> = spec.temperatures.iter().flat_map(|&t| spec.x_grid.iter().map(move |&x| (x, t))).collect();
        cells.par_iter().map(|&(x, t)| map_cell(spec, x, t)).collect()
    };
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn brackets_cover_grid_zeros() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(sign_brackets(&xs, &[-1.0, 1.0, 2.0, 3.0]), vec![(0.0, 1.0)]);
        assert_eq!(sign_brackets(&xs, &[-1.0, 0.0, 2.0, 3.0]), vec![(1.0, 1.0)]);
        assert_eq!(sign_brackets(&xs, &[-1.0, 1.0, -2.0, 3.0]).len(), 3);
        assert!(sign_brackets(&xs, &[1.0, 1.0, 2.0, 3.0]).is_empty());
    }

    #[test]
    fn stable_crossing_wins() {
        let e = |x: f64, stable: bool| Equilibrium {
            x,
            gap_over_thermal: 0.0,
            stable,
        };
        assert_eq!(pick_equilibrium(vec![]).unwrap(), None);
        assert_eq!(pick_equilibrium(vec![e(0.1, false), e(0.5, true)]).unwrap(), Some(e(0.5, true)));
        assert_eq!(pick_equilibrium(vec![e(0.1, false)]).unwrap(), Some(e(0.1, false)));
        assert!(matches!(pick_equilibrium(vec![e(0.1, true), e(0.5, true)]), Err(Error::Ambiguous(_))));
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 1e3, 7);
        assert_relative_eq!(g[0], 1e-3, max_relative = 1e-14);
        assert_relative_eq!(g[3], 1.0, max_relative = 1e-14);
        assert_relative_eq!(g[6], 1e3, max_relative = 1e-14);
    }

    #[test]
    fn pfa_force_is_continuous_at_low_temperature() {
        let x = 0.01;
        for d in [0.0, 0.6, PI / 2.0] {
            let f0 = PfaForce { x, thermal: ThermalState::zero() }.forces(&[d]).unwrap()[0];
            let f1 = PfaForce {
                x,
                thermal: ThermalState::new(0.05).unwrap(),
            }
            .forces(&[d])
            .unwrap()[0];
            assert_relative_eq!(f0, f1, max_relative = 1e-3);
        }
    }

    #[test]
    fn pfa_force_high_temperature_tracks_large_tau() {
        // F L / k_B T = F L^2 / (hbar c) * 2 pi / tau
        let x = 0.02;
        let tau = 60.0;
        for d in [0.0, 0.9, PI / 2.0] {
            let hi = PfaForce {
                x,
                thermal: ThermalState::high_temperature(),
            }
            .forces(&[d])
            .unwrap()[0];
            let fin = PfaForce {
                x,
                thermal: ThermalState::new(tau).unwrap(),
            }
            .forces(&[d])
            .unwrap()[0];
            assert_relative_eq!(fin * 2.0 * PI / tau, hi, max_relative = 1e-10);
        }
    }

    #[test]
    fn pfa_sum_rule_vanishes() {
        // the zero-frequency term has a weak endpoint singularity, the T = 0 integrand is polynomial
        for (th, tol) in [
            (ThermalState::zero(), 1e-13),
            (ThermalState::new(1.3).unwrap(), 1e-7),
            (ThermalState::high_temperature(), 1e-7),
        ] {
            let q = sumrule_quadrature(&PfaForce { x: 0.01, thermal: th }, tol).unwrap();
            assert!(q.integral.abs() < tol * q.peak, "{q:?}");
            assert!(q.split.is_some());
        }
    }

    #[test]
    fn dipole_sum_rule_matches_closed_form() {
        let (r1, r2, sl) = (1.0, 0.7, 20.0);
        for tt in [0.0, 0.8, 3.0] {
            let q = sumrule_quadrature(
                &DipoleForce {
                    r1: Some(r1),
                    r2,
                    script_l: sl,
                    tau_tilde: tt,
                },
                1e-10,
            )
            .unwrap();
            // closed form in hbar c (R1 R2)^3 / script_L^8, model in hbar c / script_L^2
            let want = dipole::sumrule_dipole_dipole(tt).unwrap() * (r1 * r2 / (sl * sl)).powi(3);
            assert_relative_eq!(q.integral, want, max_relative = 1e-12);
            let plane = sumrule_quadrature(
                &DipoleForce {
                    r1: None,
                    r2,
                    script_l: sl,
                    tau_tilde: tt,
                },
                1e-10,
            )
            .unwrap();
            assert!(plane.integral.abs() < 1e-13 * plane.peak);
        }
    }

    #[test]
    fn quadrature_reports_disagreement() {
        struct Spiky;
        impl ForceModel for Spiky {
            fn forces(&self, deltas: &[f64]) -> Result<Vec<f64>> {
                Ok(deltas.iter().map(|d| 1.0 / (1e-6 + (d - 0.3).powi(2))).collect())
            }
        }
        assert!(matches!(sumrule_quadrature(&Spiky, 1e-8), Err(Error::NoConvergence(_))));
    }

    #[test]
    fn phase_map_rejects_bad_grids() {
        let spec = PhaseMapSpec {
            u: 0.0,
            temperatures: vec![0.0],
            x_grid: vec![1.0, 0.5],
            deltas: vec![0.0],
            target: MapTarget::ForceMap,
            disc: Discretization::default(),
        };
        assert!(matches!(phase_map(&spec), Err(Error::Invalid(_))));
    }

    #[test]
    fn thermal_scan_modes() {
        let row = ThermalScan::row(0.3).unwrap();
        assert_relative_eq!(row.thermal_at(5.0).unwrap().tau(), 2.0 * PI * 0.3, max_relative = 1e-15);
        assert_relative_eq!(row.gap_over_thermal(5.0), 0.3, max_relative = 1e-15);
        let fixed = ThermalScan::FixedThermalLength(2.0);
        assert_relative_eq!(fixed.gap_over_thermal(0.5), 0.25);
        assert_relative_eq!(fixed.thermal_at(0.5).unwrap().tau(), 2.0 * PI * 0.25, max_relative = 1e-15);
        assert!(ThermalScan::row(f64::INFINITY).unwrap().thermal_at(1.0).unwrap().is_high_temperature());
    }
}
