//! Plane-wave scattering engine: reflection kernels of spheres and planes, the
//! round-trip operator per azimuthal order, log-determinants, the Matsubara sum
//! and the force.
//!
//! Internally all lengths are measured in units of the surface-to-surface gap L
//! and imaginary frequencies in units of c/L.

use crate::error::{invalid, Error, Result};
use crate::mie::{
    amplitude_scattering, duality_matrix, lmax_estimate, pec_amplitudes_log, rotate_diag, zero_frequency_amplitudes_log,
    PemcMaterial,
};
use crate::quad::{adaptive_gk_common, gauss_legendre_on};
use crate::specfun::SphericalBesselTable;
use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, Par};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Two-body geometry. `r1 = INFINITY` denotes a plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    r1: f64,
    r2: f64,
    l: f64,
}

impl Geometry {
    pub fn new(r1: f64, r2: f64, l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return invalid(format!("gap must be positive and finite, got {l}"));
        }
        if !(r2 > 0.0 && r2.is_finite()) {
            return invalid(format!("R2 must be positive and finite, got {r2}"));
        }
        if !(r1 > 0.0) {
            return invalid(format!("R1 must be positive or infinite, got {r1}"));
        }
        Ok(Self { r1, r2, l })
    }

    pub fn sphere_plane(r: f64, l: f64) -> Result<Self> {
        Self::new(f64::INFINITY, r, l)
    }

    /// Geometry with gap `l` from aspect ratio x = L/R_eff and u; u = 0 gives sphere-plane.
    pub fn from_x_u(x: f64, u: f64, l: f64) -> Result<Self> {
        if !(x > 0.0 && x.is_finite()) {
            return invalid(format!("x must be positive, got {x}"));
        }
        if !(0.0..=0.25).contains(&u) {
            return invalid(format!("u must lie in [0, 1/4], got {u}"));
        }
        let reff = l / x;
        if u == 0.0 {
            return Self::sphere_plane(reff, l);
        }
        let s = reff / u;
        let root = (1.0 - 4.0 * u).max(0.0).sqrt();
        // smaller radius via the product to avoid cancellation
        let r1 = 0.5 * s * (1.0 + root);
        Self::new(r1, reff * s / r1, l)
    }

    /// Geometry from the conformal distance y - 1 and u.
    pub fn from_y_minus_one(ym1: f64, u: f64, l: f64) -> Result<Self> {
        if !(ym1 > 0.0) {
            return invalid(format!("need y > 1, got y - 1 = {ym1}"));
        }
        let x = 2.0 * ym1 / (1.0 + (1.0 + 2.0 * u * ym1).sqrt());
        Self::from_x_u(x, u, l)
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn is_plane(&self) -> bool {
        self.r1.is_infinite()
    }

    pub fn r_eff(&self) -> f64 {
        if self.is_plane() {
            self.r2
        } else {
            self.r1 * self.r2 / (self.r1 + self.r2)
        }
    }

    /// Center-to-center distance (center-to-plane for a plane).
    pub fn script_l(&self) -> f64 {
        if self.is_plane() {
            self.l + self.r2
        } else {
            self.l + self.r1 + self.r2
        }
    }

    pub fn x(&self) -> f64 {
        self.l / self.r_eff()
    }

    pub fn u(&self) -> f64 {
        if self.is_plane() {
            0.0
        } else {
            let s = self.r1 + self.r2;
            self.r1 * self.r2 / (s * s)
        }
    }

    pub fn y(&self) -> f64 {
        let x = self.x();
        1.0 + x + 0.5 * self.u() * x * x
    }

    /// Spheres exchanged; a plane cannot be exchanged.
    pub fn swapped(&self) -> Result<Self> {
        if self.is_plane() {
            return invalid("cannot exchange a plane with a sphere");
        }
        Self::new(self.r2, self.r1, self.l)
    }

    pub fn with_gap(&self, l: f64) -> Result<Self> {
        Self::new(self.r1, self.r2, l)
    }
}

/// Temperature as tau = 2 pi L / lambda_T; zero is T = 0 and infinity the high-temperature limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalState {
    tau: f64,
}

impl ThermalState {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau >= 0.0) {
            return invalid(format!("tau must be non-negative, got {tau}"));
        }
        Ok(Self { tau })
    }

    pub fn zero() -> Self {
        Self { tau: 0.0 }
    }

    pub fn high_temperature() -> Self {
        Self { tau: f64::INFINITY }
    }

    /// From L / lambda_T.
    pub fn from_gap_over_thermal(r: f64) -> Result<Self> {
        Self::new(2.0 * PI * r)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tau_tilde(&self, geom: &Geometry) -> f64 {
        self.tau * geom.script_l() / geom.l()
    }

    pub fn is_zero(&self) -> bool {
        self.tau == 0.0
    }

    pub fn is_high_temperature(&self) -> bool {
        self.tau.is_infinite()
    }
}

/// Truncation and quadrature controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    /// N = ceil(node_a sqrt(R_max / L)) + node_b unless `nodes` is set.
    pub node_a: f64,
    pub node_b: f64,
    pub nodes: Option<usize>,
    /// radial map k = k_scale t / (1 - t), in units of 1/L
    pub k_scale: f64,
    /// kernel elements below exp(-log_cutoff) are dropped
    pub log_cutoff: f64,
    pub m_max: Option<usize>,
    /// fixed multipole cutoff of the finite-frequency amplitude tables; the
    /// solver fails instead of enlarging it
    pub l_max: Option<usize>,
    /// stop the m-sum once two consecutive orders change f by less than this (relative)
    pub m_tol: f64,
    pub matsubara_tol: f64,
    pub max_matsubara: usize,
    /// relative tolerance of the T = 0 frequency integral
    pub xi_rel_tol: f64,
    pub xi_max_panels: usize,
    /// use only the zero frequency once tau_tilde exceeds this
    pub tau_tilde_cut: Option<f64>,
    /// finite-difference step relative to L
    pub force_step: f64,
    /// smallest absolute step, in the length unit of the geometry
    pub force_step_min: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            node_a: 8.0,
            node_b: 30.0,
            nodes: None,
            k_scale: 1.0,
            log_cutoff: 36.0,
            m_max: None,
            l_max: None,
            m_tol: 1e-12,
            matsubara_tol: 1e-8,
            max_matsubara: 20_000,
            xi_rel_tol: 1e-5,
            xi_max_panels: 200,
            tau_tilde_cut: None,
            force_step: 1e-4,
            force_step_min: 0.0,
        }
    }
}

impl Discretization {
    pub fn node_count(&self, geom: &Geometry) -> usize {
        let rmax = if geom.is_plane() { geom.r2() } else { geom.r1().max(geom.r2()) };
        self.nodes
            .unwrap_or_else(|| (self.node_a * (rmax / geom.l()).sqrt()).ceil() as usize + self.node_b as usize)
            .max(8)
    }
}

type V3 = [Complex64; 3];

fn cross(a: &V3, b: &V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &V3, b: &V3) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale3(a: &V3, s: Complex64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Unit wave vector, TE and TM vectors of a plane wave at imaginary frequency.
fn wave_basis(k: f64, phi: f64, xi: f64, sigma: f64) -> (V3, V3, V3) {
    let s = 1.0 / xi;
    let kap = k.hypot(xi);
    let (sp, cp) = phi.sin_cos();
    let i = Complex64::i();
    let khat = [-i * (s * k * cp), -i * (s * k * sp), Complex64::new(sigma * s * kap, 0.0)];
    let te = [Complex64::new(-sp, 0.0), Complex64::new(cp, 0.0), Complex64::new(0.0, 0.0)];
    let tm = cross(&khat, &te);
    (khat, te, tm)
}

/// Polarization coefficients (A, B, C, D) from explicit polarization vectors.
/// `sigma` is the propagation direction of the outgoing wave along z.
pub(crate) fn polarization_coefficients_oriented(
    k: f64,
    phi: f64,
    kp: f64,
    phip: f64,
    xi: f64,
    sigma: f64,
) -> Result<[f64; 4]> {
    if !(k >= 0.0 && kp >= 0.0 && xi >= 0.0) {
        return invalid("polarization coefficients need k, k', xi >= 0");
    }
    if k == 0.0 && kp == 0.0 {
        return invalid("k = k' = 0: scattering plane undefined");
    }
    if xi == 0.0 {
        return Ok([1.0, 0.0, 0.0, 0.0]);
    }
    let (ko, teo, tmo) = wave_basis(k, phi, xi, sigma);
    let (ki, tei, tmi) = wave_basis(kp, phip, xi, -sigma);
    let z = dot(&ko, &ki);
    let norm = Complex64::i() * (z * z - 1.0).sqrt();
    if norm.norm() < 1e-300 {
        return invalid("forward direction: scattering plane undefined");
    }
    let perp = scale3(&cross(&ko, &ki), 1.0 / norm);
    let par_o = cross(&ko, &perp);
    let par_i = cross(&ki, &perp);
    let a = dot(&tmo, &par_o) * dot(&par_i, &tmi);
    let b = dot(&tmo, &perp) * dot(&perp, &tmi);
    let c = dot(&tmo, &perp) * dot(&perp, &tei);
    let d = dot(&tmo, &par_o) * dot(&par_i, &tei);
    let _ = teo;
    Ok([a.re, b.re, c.re, d.re])
}

/// Polarization coefficients (A, B, C, D) for an outgoing wave (k, phi) travelling
/// towards -z and an incoming wave (k', phi') travelling towards +z.
pub fn polarization_coefficients(k: f64, phi: f64, kp: f64, phip: f64, xi: f64) -> Result<[f64; 4]> {
    polarization_coefficients_oriented(k, phi, kp, phip, xi, -1.0)
}

/// Closed-form coefficients in stable variables; `c2 = cos^2(dphi/2)`.
/// Returns ([A, B, C, D], h) with h = -(z + 1) xi^2.
#[inline]
fn polarization_closed(k: f64, kp: f64, kap: f64, kapp: f64, xi: f64, c2: f64, sin_d: f64, sigma: f64) -> ([f64; 4], f64) {
    let q2 = xi * xi;
    let mix = q2 * (k * k - kp * kp) / (k * kapp + kap * kp);
    let g1 = 2.0 * kap * kp * c2 + mix;
    let g2 = 2.0 * k * kapp * c2 - mix;
    let dk = k - kp;
    let h = 2.0 * k * kp * c2 + q2 * dk * dk / (kap * kapp + k * kp + q2);
    let inv = 1.0 / (h * (h + 2.0 * q2));
    let a = g1 * g2 * inv;
    let b = q2 * k * kp * sin_d * sin_d * inv;
    let c = -sigma * xi * kp * sin_d * g2 * inv;
    let d = sigma * xi * k * sin_d * g1 * inv;
    ([a, b, c, d], h)
}

fn combine(coef: [f64; 4], s: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    // (-1)^p with p = TM -> -1, p = TE -> +1
    let sg = [-1.0, 1.0];
    let [a, b, c, d] = coef;
    let mut r = [[0.0; 2]; 2];
    for p in 0..2 {
        for q in 0..2 {
            r[p][q] = a * s[p][q] + sg[p] * sg[q] * b * s[1 - p][1 - q] - sg[p] * c * s[1 - p][q] + sg[q] * d * s[p][1 - q];
        }
    }
    r
}

/// Plane-wave reflection matrix element of a sphere of radius `radius` in the
/// (TM, TE) basis, outgoing wave (k, phi) towards -z, incoming (k', phi') towards +z.
pub fn reflection_planewave(
    radius: f64,
    mat: PemcMaterial,
    out: (f64, f64),
    inc: (f64, f64),
    xi: f64,
) -> Result<[[f64; 2]; 2]> {
    reflection_planewave_oriented(radius, mat, out, inc, xi, -1.0)
}

pub(crate) fn reflection_planewave_oriented(
    radius: f64,
    mat: PemcMaterial,
    out: (f64, f64),
    inc: (f64, f64),
    xi: f64,
    sigma: f64,
) -> Result<[[f64; 2]; 2]> {
    if !(xi > 0.0) {
        return invalid("reflection_planewave needs xi > 0; use the zero-frequency form");
    }
    let (k, phi) = out;
    let (kp, phip) = inc;
    let coef = polarization_coefficients_oriented(k, phi, kp, phip, xi, sigma)?;
    let kap = k.hypot(xi);
    let kapp = kp.hypot(xi);
    let z = -(k * kp * (phi - phip).cos() + kap * kapp) / (xi * xi);
    let s = amplitude_scattering(None, z, xi * radius, mat)?;
    let pre = 2.0 * PI / (xi * kap);
    let r = combine(coef, s);
    Ok(r.map(|row| row.map(|v| pre * v)))
}

/// Zero-frequency reflection matrix times xi/c: (2 pi / k) R D S D^{-1}.
pub fn reflection_planewave_zero_freq(radius: f64, mat: PemcMaterial, out: (f64, f64), inc: (f64, f64)) -> Result<[[f64; 2]; 2]> {
    let (k, phi) = out;
    let (kp, phip) = inc;
    if !(k > 0.0 && kp > 0.0) {
        return invalid("zero-frequency reflection needs k, k' > 0");
    }
    let chi = 2.0 * radius * (k * kp).sqrt() * (0.5 * (phi - phip)).cos();
    let (ltm, lte) = zero_frequency_amplitudes_log(chi);
    let pre = 2.0 * PI * radius / k;
    let r = rotate_diag(ltm.exp(), -lte.exp(), mat.theta());
    Ok(r.map(|row| row.map(|v| pre * v)))
}

const CHEB_N: usize = 24;

/// Piecewise Chebyshev interpolant of (ln S_TM, ln(-S_TE)) in v = sqrt(x - 1).
struct LogAmplitudes {
    lo: Vec<f64>,
    hi: Vec<f64>,
    coef: Vec<[[f64; CHEB_N]; 2]>,
}

fn cheb_fit(vals: &[f64; CHEB_N]) -> [f64; CHEB_N] {
    let n = CHEB_N as f64;
    let mut c = [0.0; CHEB_N];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut s = 0.0;
        for (j, v) in vals.iter().enumerate() {
            s += v * (PI * k as f64 * (j as f64 + 0.5) / n).cos();
        }
        *ck = 2.0 * s / n;
    }
    c[0] *= 0.5;
    c
}

fn clenshaw(c: &[f64; CHEB_N], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + c[0]
}

impl LogAmplitudes {
    fn build<F: FnMut(f64) -> Result<(f64, f64)>>(mut f: F, a: f64, b: f64) -> Result<Self> {
        let mut stack = vec![(a, b, 0usize)];
        let mut panels: Vec<(f64, f64, [[f64; CHEB_N]; 2])> = Vec::new();
        while let Some((lo, hi, depth)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let mut vals = [[0.0; CHEB_N]; 2];
            for j in 0..CHEB_N {
                let t = (PI * (j as f64 + 0.5) / CHEB_N as f64).cos();
                let (p, q) = f(mid + half * t)?;
                vals[0][j] = p;
                vals[1][j] = q;
            }
            let c = [cheb_fit(&vals[0]), cheb_fit(&vals[1])];
            let ok = c.iter().zip(&vals).all(|(ci, vi)| {
                let scale = vi.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                let tail = ci[CHEB_N - 3..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
                tail <= 1e-13 * scale
            });
            if ok || depth >= 48 || half <= 1e-14 * hi.abs().max(1e-300) {
                panels.push((lo, hi, c));
            } else {
                stack.push((mid, hi, depth + 1));
                stack.push((lo, mid, depth + 1));
            }
        }
        panels.sort_by(|x, y| x.0.total_cmp(&y.0));
        Ok(Self {
            lo: panels.iter().map(|p| p.0).collect(),
            hi: panels.iter().map(|p| p.1).collect(),
            coef: panels.into_iter().map(|p| p.2).collect(),
        })
    }

    #[inline]
    fn eval(&self, v: f64) -> (f64, f64) {
        let i = self.lo.partition_point(|&l| l <= v).saturating_sub(1);
        let (lo, hi) = (self.lo[i], self.hi[i]);
        let t = ((2.0 * v - lo - hi) / (hi - lo)).clamp(-1.0, 1.0);
        (clenshaw(&self.coef[i][0], t), clenshaw(&self.coef[i][1], t))
    }
}

/// Radial Nystrom nodes and weights on [0, inf).
/// Coarse pre-filter on the round-trip decay e^{-2 kappa L}; the margin leaves
/// room for power-law growth of small-sphere amplitudes, and the pair
/// selection relative to the largest element does the rest.
fn node_active(k: f64, xi: f64, disc: &Discretization) -> bool {
    k.hypot(xi) < disc.log_cutoff
}

fn radial_nodes(n: usize, k_scale: f64) -> (Vec<f64>, Vec<f64>) {
    let (t, wt) = gauss_legendre_on(n, 0.0, 1.0);
    let k = t.iter().map(|t| k_scale * t / (1.0 - t)).collect();
    let w = t.iter().zip(&wt).map(|(t, w)| k_scale * w / ((1.0 - t) * (1.0 - t))).collect();
    (k, w)
}

/// Fourier blocks of one symmetrized PEC sphere kernel, including the
/// translation to the gap midpoint on both sides.
/// `blocks[m]` is 2n x 2n in (TM, TE) x nodes; the polarization-diagonal parts
/// hold real values, the off-diagonal parts the imaginary parts.
struct SphereBlocks {
    n: usize,
    blocks: Vec<Mat<f64>>,
    lmax: usize,
}

impl SphereBlocks {
    fn m_cap(&self) -> usize {
        self.blocks.len() - 1
    }

    fn complex(&self, m: usize) -> Mat<c64> {
        let n = self.n;
        let b = &self.blocks[m];
        Mat::from_fn(2 * n, 2 * n, |i, j| {
            let v = b[(i, j)];
            if (i < n) == (j < n) {
                c64::new(v, 0.0)
            } else {
                c64::new(0.0, v)
            }
        })
    }
}

fn fft_len(min: usize) -> usize {
    let mut best = usize::MAX;
    let mut p2 = 2usize;
    while p2 < 2 * min.max(2) {
        let mut v = p2;
        while v < min {
            v *= 3;
        }
        best = best.min(v);
        p2 *= 2;
    }
    best
}

struct PairPlan {
    b: usize,
    e: f64,
    m: usize,
}

fn sphere_blocks(r: f64, d: f64, sigma: f64, xi: f64, k: &[f64], w: &[f64], disc: &Discretization) -> Result<SphereBlocks> {
    let n = k.len();
    let cut = disc.log_cutoff;
    let zero = xi == 0.0;
    let kap: Vec<f64> = k.iter().map(|k| k.hypot(xi)).collect();

    let interp = if zero {
        None
    } else {
        let kmax = k.iter().cloned().fold(0.0, f64::max);
        let vmax = (2.0 * kmax * kmax).sqrt() / xi * (1.0 + 1e-12) + 1e-12;
        let xr = xi * r;
        let mut lmax = disc.l_max.unwrap_or_else(|| lmax_estimate(xr, 1.0 + vmax * vmax));
        let table = loop {
            let t = SphericalBesselTable::new(xr, lmax)?;
            match pec_amplitudes_log(&t, 1.0 + vmax * vmax) {
                Ok(_) => break t,
                Err(_) if disc.l_max.is_none() && lmax < 1 << 24 => lmax *= 2,
                Err(e) => return Err(e),
            }
        };
        let li = LogAmplitudes::build(|v| pec_amplitudes_log(&table, 1.0 + v * v), 0.0, vmax)?;
        Some((li, table.lmax()))
    };

    // per-node log prefactors
    let e_node: Vec<f64> = (0..n)
        .map(|a| {
            if zero {
                0.5 * w[a].ln() - k[a] * d
            } else {
                0.5 * (w[a] * k[a] / kap[a]).ln() - kap[a] * d
            }
        })
        .collect();
    let e_const = if zero { r.ln() } else { -xi.ln() };

    let log_amp = |a: usize, b: usize, c2: f64| -> (f64, f64) {
        if zero {
            zero_frequency_amplitudes_log(2.0 * r * (k[a] * k[b]).sqrt() * c2.sqrt())
        } else {
            let dk = k[a] - k[b];
            let h = 2.0 * k[a] * k[b] * c2 + xi * xi * dk * dk / (kap[a] * kap[b] + k[a] * k[b] + xi * xi);
            interp.as_ref().unwrap().0.eval(h.sqrt() / xi)
        }
    };

    // pair selection and azimuthal cutoff, relative to the largest element
    let lm0: Vec<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|a| {
            (0..n)
                .map(|b| {
                    let e = e_node[a] + e_node[b] + e_const;
                    let (lp, ls) = log_amp(a, b, 1.0);
                    (lp.max(ls) + e, e)
                })
                .collect()
        })
        .collect();
    let top = lm0.iter().flatten().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let plans: Vec<Vec<PairPlan>> = (0..n)
        .map(|a| {
            let mut row = Vec::new();
            for b in 0..n {
                let (lm, e) = lm0[a][b];
                let depth = cut + lm - top;
                if depth < 0.0 {
                    continue;
                }
                // Gaussian width of the azimuthal profile
                let width = if zero {
                    0.25 * r * (k[a] * k[b]).sqrt()
                } else {
                    let dk = k[a] - k[b];
                    let h0 = 2.0 * k[a] * k[b] + xi * xi * dk * dk / (kap[a] * kap[b] + k[a] * k[b] + xi * xi);
                    r * k[a] * k[b] / (2.0 * (2.0 * h0).sqrt())
                };
                let m = (4.0 * width * depth).sqrt().ceil() as usize + 4;
                row.push(PairPlan { b, e, m });
            }
            row
        })
        .collect();
    let mut m_cap = plans.iter().flatten().map(|p| p.m).max().unwrap_or(0);
    if let Some(mm) = disc.m_max {
        m_cap = m_cap.min(mm);
    }
    let nphi = fft_len(2 * m_cap + 2);
    let half = nphi / 2;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nphi);
    let grid: Vec<(f64, f64)> = (0..half)
        .map(|j| {
            let delta = 2.0 * PI * (j as f64 + 0.5) / nphi as f64;
            let c = (0.5 * delta).cos();
            (c * c, delta.sin())
        })
        .collect();
    let phase: Vec<Complex64> =
        (0..=m_cap).map(|m| Complex64::from_polar(1.0 / nphi as f64, -PI * m as f64 / nphi as f64)).collect();

    let mut blocks: Vec<Mat<f64>> = (0..=m_cap).map(|_| Mat::zeros(2 * n, 2 * n)).collect();
    let rows: Vec<usize> = (0..n).collect();
    for chunk in rows.chunks(16) {
        let results: Vec<Vec<(usize, Vec<[f64; 4]>)>> = chunk
            .par_iter()
            .map(|&a| {
                let mut buf1 = vec![Complex64::new(0.0, 0.0); nphi];
                let mut buf2 = vec![Complex64::new(0.0, 0.0); nphi];
                let mut out = Vec::with_capacity(plans[a].len());
                for p in &plans[a] {
                    let b = p.b;
                    for (j, &(c2, sd)) in grid.iter().enumerate() {
                        let (lp, ls) = log_amp(a, b, c2);
                        let (tmtm, tete, tmte, tetm) = if zero {
                            ((lp + p.e).exp(), -(ls + p.e).exp(), 0.0, 0.0)
                        } else {
                            let ([ca, cb, cc, cd], _) = polarization_closed(k[a], k[b], kap[a], kap[b], xi, c2, sd, sigma);
                            let ep = (lp + p.e).exp();
                            let es = (ls + p.e).exp();
                            (ca * ep - cb * es, cb * ep - ca * es, cd * ep - cc * es, cd * es - cc * ep)
                        };
                        buf1[j] = Complex64::new(tmtm, tete);
                        buf1[nphi - 1 - j] = buf1[j];
                        buf2[j] = Complex64::new(tmte, tetm);
                        buf2[nphi - 1 - j] = -buf2[j];
                    }
                    fft.process(&mut buf1);
                    fft.process(&mut buf2);
                    let mm = p.m.min(m_cap);
                    let coeffs: Vec<[f64; 4]> = (0..=mm)
                        .map(|m| {
                            let p1 = buf1[m] * phase[m];
                            let p2 = buf2[m] * phase[m];
                            [p1.re, p1.im, p2.im, -p2.re]
                        })
                        .collect();
                    out.push((b, coeffs));
                }
                out
            })
            .collect();
        for (&a, row) in chunk.iter().zip(results) {
            for (b, coeffs) in row {
                for (m, c) in coeffs.iter().enumerate() {
                    let blk = &mut blocks[m];
                    blk[(a, b)] = c[0];
                    blk[(n + a, n + b)] = c[1];
                    blk[(a, n + b)] = c[2];
                    blk[(n + a, b)] = c[3];
                }
            }
        }
    }
    Ok(SphereBlocks {
        n,
        blocks,
        lmax: interp.map(|i| i.1).unwrap_or(0),
    })
}

enum FirstObject {
    Plane,
    Sphere(SphereBlocks),
}

/// Both reflection kernels at one imaginary frequency.
struct XiKernels {
    n: usize,
    kap: Vec<f64>,
    obj1: FirstObject,
    s2: SphereBlocks,
}

/// Problem setup in gap units.
struct Setup {
    r1: Option<f64>,
    r2: f64,
    k: Vec<f64>,
    w: Vec<f64>,
    disc: Discretization,
}

impl Setup {
    fn new(geom: &Geometry, disc: &Discretization) -> Self {
        let l = geom.l();
        let n = disc.node_count(geom);
        let (k, w) = radial_nodes(n, disc.k_scale);
        Self {
            r1: if geom.is_plane() { None } else { Some(geom.r1() / l) },
            r2: geom.r2() / l,
            k,
            w,
            disc: disc.clone(),
        }
    }

    fn kernels(&self, xi: f64) -> Result<Option<XiKernels>> {
        // nodes whose round trip is not negligible
        let active: Vec<usize> = (0..self.k.len()).filter(|&a| node_active(self.k[a], xi, &self.disc)).collect();
        if active.is_empty() {
            return Ok(None);
        }
        let k: Vec<f64> = active.iter().map(|&a| self.k[a]).collect();
        let w: Vec<f64> = active.iter().map(|&a| self.w[a]).collect();
        let kap = k.iter().map(|k| k.hypot(xi)).collect();
        let s2 = sphere_blocks(self.r2, self.r2 + 0.5, -1.0, xi, &k, &w, &self.disc)?;
        let obj1 = match self.r1 {
            None => FirstObject::Plane,
            Some(r1) => FirstObject::Sphere(sphere_blocks(r1, r1 + 0.5, 1.0, xi, &k, &w, &self.disc)?),
        };
        Ok(Some(XiKernels { n: k.len(), kap, obj1, s2 }))
    }
}

fn trace_product(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            s += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    s
}

fn square(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    let n = a.nrows();
    let mut out = Mat::<c64>::zeros(n, b.ncols());
    matmul(out.as_mut(), Accum::Replace, a.as_ref(), b.as_ref(), c64::new(1.0, 0.0), Par::Seq);
    out
}

/// Real part of log det(1 - M). Small kernels use the round-trip series, which
/// keeps full relative precision where 1 - M rounds to the identity.
fn logdet_one_minus(m: &Mat<c64>) -> f64 {
    let n = m.nrows();
    let norm = m.norm_l2();
    if norm < 1e-5 {
        let t1: f64 = (0..n).map(|i| m[(i, i)].re).sum();
        let t2 = trace_product(m, m);
        if norm < 1e-9 {
            return -t1 - 0.5 * t2;
        }
        let m2 = square(m, m);
        let t3 = trace_product(&m2, m);
        let t4 = trace_product(&m2, &m2);
        return -(t1 + t2 / 2.0 + t3 / 3.0 + t4 / 4.0);
    }
    let a = Mat::from_fn(n, n, |i, j| if i == j { c64::new(1.0, 0.0) - m[(i, j)] } else { -m[(i, j)] });
    let lu = a.partial_piv_lu();
    let u = lu.U();
    (0..n).map(|i| u[(i, i)].norm().ln()).sum()
}

impl XiKernels {
    fn m_cap(&self) -> usize {
        match &self.obj1 {
            FirstObject::Plane => self.s2.m_cap(),
            FirstObject::Sphere(s1) => self.s2.m_cap().min(s1.m_cap()),
        }
    }

    fn lmax(&self) -> usize {
        match &self.obj1 {
            FirstObject::Plane => self.s2.lmax,
            FirstObject::Sphere(s1) => self.s2.lmax.max(s1.lmax),
        }
    }

    /// Round-trip block of order m for relative duality angle `rel` = theta1 - theta2
    /// and gap scaled to 1 + eps.
    fn round_trip(&self, m: usize, a2: &Mat<c64>, a1: Option<&Mat<c64>>, rel: f64, eps: f64) -> Mat<c64> {
        let n = self.n;
        match a1 {
            None => {
                let p = rotate_diag(1.0, -1.0, rel);
                let e: Vec<f64> = self.kap.iter().map(|k| (-k * (1.0 + 2.0 * eps)).exp()).collect();
                Mat::from_fn(2 * n, 2 * n, |i, j| {
                    let (q, b) = (j / n, j % n);
                    let s = e[b];
                    a2[(i, b)] * (s * p[0][q]) + a2[(i, n + b)] * (s * p[1][q])
                })
            }
            Some(a1) => {
                let g = duality_matrix(rel);
                let e: Vec<f64> = self.kap.iter().map(|k| (-k * eps).exp()).collect();
                // G A1 G^T, then the offset scaling on both sides
                let b1 = Mat::from_fn(2 * n, 2 * n, |i, j| {
                    let (p, a) = (i / n, i % n);
                    let (q, b) = (j / n, j % n);
                    let mut s = c64::new(0.0, 0.0);
                    for r in 0..2 {
                        for t in 0..2 {
                            s += a1[(r * n + a, t * n + b)] * (g[p][r] * g[q][t]);
                        }
                    }
                    s * (e[a] * e[b])
                });
                let mut out = Mat::<c64>::zeros(2 * n, 2 * n);
                matmul(out.as_mut(), Accum::Replace, a2.as_ref(), b1.as_ref(), c64::new(1.0, 0.0), Par::Seq);
                let _ = m;
                out
            }
        }
    }

    fn a1_block(&self, m: usize) -> Option<Mat<c64>> {
        match &self.obj1 {
            FirstObject::Plane => None,
            FirstObject::Sphere(s1) => Some(s1.complex(m)),
        }
    }

    /// f = sum_m w_m ln|det(1 - M_m)| for every (angle, offset) pair, angle-major.
    fn logdets(&self, rels: &[f64], offsets: &[f64], m_tol: f64) -> (Vec<f64>, usize) {
        let nc = rels.len() * offsets.len();
        let mut total = vec![0.0; nc];
        let cap = self.m_cap();
        let chunk = 4usize;
        let mut small = 0usize;
        let mut m0 = 0usize;
        let mut used = 0usize;
        while m0 <= cap {
            let ms: Vec<usize> = (m0..=(m0 + chunk - 1).min(cap)).collect();
            let res: Vec<Vec<f64>> = ms
                .par_iter()
                .map(|&m| {
                    let a2 = self.s2.complex(m);
                    let a1 = self.a1_block(m);
                    let wm = if m == 0 { 1.0 } else { 2.0 };
                    let mut v = Vec::with_capacity(nc);
                    for &rel in rels {
                        for &eps in offsets {
                            let blk = self.round_trip(m, &a2, a1.as_ref(), rel, eps);
                            v.push(wm * logdet_one_minus(&blk));
                        }
                    }
                    v
                })
                .collect();
            let mut done = false;
            for (m, v) in ms.iter().zip(res) {
                for c in 0..nc {
                    total[c] += v[c];
                }
                used = *m;
                let scale = total.iter().fold(0.0f64, |s, t| s.max(t.abs()));
                if v.iter().all(|x| x.abs() <= m_tol * scale) {
                    small += 1;
                } else {
                    small = 0;
                }
                if small >= 2 {
                    done = true;
                }
            }
            if done {
                break;
            }
            m0 += chunk;
        }
        (total, used)
    }

    /// sum_m w_m Re tr(M_m^r) at offset zero.
    fn trace_power(&self, rel: f64, r: usize) -> f64 {
        (0..=self.m_cap())
            .map(|m| {
                let a2 = self.s2.complex(m);
                let a1 = self.a1_block(m);
                let blk = self.round_trip(m, &a2, a1.as_ref(), rel, 0.0);
                let wm = if m == 0 { 1.0 } else { 2.0 };
                wm * trace_of_power(&blk, r)
            })
            .sum()
    }
}

fn trace_of_power(m: &Mat<c64>, r: usize) -> f64 {
    let n = m.nrows();
    let mut p = m.clone();
    for _ in 1..r {
        let mut q = Mat::<c64>::zeros(n, n);
        matmul(q.as_mut(), Accum::Replace, p.as_ref(), m.as_ref(), c64::new(1.0, 0.0), Par::Seq);
        p = q;
    }
    (0..n).map(|i| p[(i, i)].re).sum()
}

/// Assembled round-trip operator at one imaginary frequency, one block per azimuthal order.
#[derive(Debug, Clone)]
pub struct RoundTripKernel {
    /// imaginary frequency in units of c/L
    pub xi: f64,
    /// M_m for m = 0..=m_max; blocks for -m are the complex conjugates
    pub blocks: Vec<Mat<c64>>,
    /// active radial nodes (units 1/L) and weights
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub lmax: usize,
    pub m_max: usize,
}

impl RoundTripKernel {
    /// sum over all orders m of Re tr(M_m^r).
    pub fn trace_power(&self, r: usize) -> f64 {
        self.blocks
            .iter()
            .enumerate()
            .map(|(m, b)| if m == 0 { 1.0 } else { 2.0 } * trace_of_power(b, r))
            .sum()
    }
}

/// Round-trip kernel at imaginary frequency `xi` (units c/L; zero allowed).
pub fn build_kernel(
    geom: &Geometry,
    mat1: PemcMaterial,
    mat2: PemcMaterial,
    xi: f64,
    disc: &Discretization,
) -> Result<RoundTripKernel> {
    if !(xi >= 0.0 && xi.is_finite()) {
        return invalid(format!("xi must be finite and non-negative, got {xi}"));
    }
    let setup = Setup::new(geom, disc);
    let rel = mat1.theta() - mat2.theta();
    let Some(kern) = setup.kernels(xi)? else {
        return Ok(RoundTripKernel {
            xi,
            blocks: vec![Mat::zeros(0, 0)],
            nodes: vec![],
            weights: vec![],
            lmax: 0,
            m_max: 0,
        });
    };
    let blocks = (0..=kern.m_cap())
        .map(|m| {
            let a2 = kern.s2.complex(m);
            let a1 = kern.a1_block(m);
            kern.round_trip(m, &a2, a1.as_ref(), rel, 0.0)
        })
        .collect();
    let active: Vec<usize> = (0..setup.k.len()).filter(|&a| node_active(setup.k[a], xi, disc)).collect();
    Ok(RoundTripKernel {
        xi,
        blocks,
        nodes: active.iter().map(|&a| setup.k[a]).collect(),
        weights: active.iter().map(|&a| setup.w[a]).collect(),
        lmax: kern.lmax(),
        m_max: kern.m_cap(),
    })
}

/// f = sum_m w_m log det(1 - M_m), w_0 = 1 and w_m = 2 otherwise.
pub fn logdet_f_n(kernel: &RoundTripKernel) -> Result<f64> {
    let mut f = 0.0;
    for (m, b) in kernel.blocks.iter().enumerate() {
        if b.nrows() == 0 {
            continue;
        }
        let v = logdet_one_minus(b);
        if !v.is_finite() {
            return Err(Error::NoConvergence(format!("log-determinant not finite at m = {m}")));
        }
        f += if m == 0 { v } else { 2.0 * v };
    }
    Ok(f)
}

/// Sum over orders of Re tr(M_m^r) straight from the frequency kernels, for
/// relative duality angle theta1 - theta2.
pub fn round_trip_trace(geom: &Geometry, rel_angle: f64, xi: f64, r: usize, disc: &Discretization) -> Result<f64> {
    let setup = Setup::new(geom, disc);
    Ok(match setup.kernels(xi)? {
        Some(k) => k.trace_power(rel_angle, r),
        None => 0.0,
    })
}

/// Truncation diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Convergence {
    pub nodes: usize,
    pub m_max: usize,
    pub lmax: usize,
    pub matsubara_terms: usize,
    pub xi_evaluations: usize,
    pub warnings: Vec<String>,
}

/// Free energy in units hbar c / L (finite temperature or T = 0) and k_B T (T > 0).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub free_energy: Option<f64>,
    pub free_energy_kt: Option<f64>,
    pub per_n: Vec<f64>,
    pub convergence: Convergence,
}

/// Force F = -dF/dL, negative for attraction, in units hbar c / L^2 and k_B T / L.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceReport {
    pub force: Option<f64>,
    pub force_kt: Option<f64>,
    pub energy: EnergyReport,
}

struct RunOut {
    kt: Option<Vec<f64>>,
    hc: Option<Vec<f64>>,
    per_n: Vec<Vec<f64>>,
    conv: Convergence,
}

fn f_at(setup: &Setup, xi: f64, rels: &[f64], offsets: &[f64], conv: &mut Convergence) -> Result<Vec<f64>> {
    conv.xi_evaluations += 1;
    let Some(kern) = setup.kernels(xi)? else {
        return Ok(vec![0.0; rels.len() * offsets.len()]);
    };
    let (f, m) = kern.logdets(rels, offsets, setup.disc.m_tol);
    conv.m_max = conv.m_max.max(m);
    conv.lmax = conv.lmax.max(kern.lmax());
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence(format!("non-finite log-determinant at xi = {xi}")));
    }
    Ok(f)
}

fn run(geom: &Geometry, rels: &[f64], offsets: &[f64], thermal: ThermalState, disc: &Discretization) -> Result<RunOut> {
    let setup = Setup::new(geom, disc);
    let mut conv = Convergence {
        nodes: setup.k.len(),
        ..Default::default()
    };
    let nc = rels.len() * offsets.len();
    let tau = thermal.tau();
    let high_t = thermal.is_high_temperature() || disc.tau_tilde_cut.is_some_and(|c| thermal.tau_tilde(geom) > c);
    if high_t {
        let f0 = f_at(&setup, 0.0, rels, offsets, &mut conv)?;
        conv.matsubara_terms = 1;
        let kt: Vec<f64> = f0.iter().map(|f| 0.5 * f).collect();
        let hc = tau.is_finite().then(|| kt.iter().map(|v| tau / (2.0 * PI) * v).collect());
        return Ok(RunOut {
            kt: Some(kt),
            hc,
            per_n: f0.iter().map(|&f| vec![f]).collect(),
            conv,
        });
    }
    if tau > 0.0 {
        let mut per_n: Vec<Vec<f64>> = vec![Vec::new(); nc];
        let mut small = 0usize;
        let mut f0max = 0.0f64;
        let mut n = 0usize;
        loop {
            let f = f_at(&setup, n as f64 * tau, rels, offsets, &mut conv)?;
            for c in 0..nc {
                per_n[c].push(f[c]);
            }
            if n == 0 {
                f0max = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            } else if f.iter().all(|v| v.abs() < disc.matsubara_tol * f0max) {
                small += 1;
            } else {
                small = 0;
            }
            n += 1;
            if small >= 3 || f0max == 0.0 {
                break;
            }
            if n > disc.max_matsubara {
                return Err(Error::NoConvergence(format!("Matsubara sum not converged after {n} terms")));
            }
        }
        conv.matsubara_terms = n;
        let kt: Vec<f64> = per_n
            .iter()
            .map(|fs| {
                let s: f64 = 0.5 * fs[0] + fs[1..].iter().sum::<f64>();
                let tail = if fs.len() >= 3 {
                    let (a, b) = (fs[fs.len() - 2], fs[fs.len() - 1]);
                    let r = b / a;
                    if a != 0.0 && r > 0.0 && r < 1.0 {
                        b * r / (1.0 - r)
                    } else {
                        0.0
                    }
                } else {
                    0.0
                };
                s + tail
            })
            .collect();
        let hc = kt.iter().map(|v| tau / (2.0 * PI) * v).collect();
        return Ok(RunOut {
            kt: Some(kt),
            hc: Some(hc),
            per_n,
            conv,
        });
    }
    // T = 0: xi = t / (1 - t)
    let mut conv_cell = conv;
    let (vals, _) = adaptive_gk_common(
        |ts| {
            ts.iter()
                .map(|&t| {
                    let xi = t / (1.0 - t);
                    let jac = 1.0 / ((1.0 - t) * (1.0 - t));
                    Ok(f_at(&setup, xi, rels, offsets, &mut conv_cell)?.into_iter().map(|v| v * jac).collect())
                })
                .collect()
        },
        0.0,
        1.0,
        disc.xi_rel_tol,
        disc.xi_max_panels,
    )?;
    Ok(RunOut {
        kt: None,
        hc: Some(vals.iter().map(|v| v / (2.0 * PI)).collect()),
        per_n: vec![Vec::new(); nc],
        conv: conv_cell,
    })
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    for &d in deltas {
        crate::pfa::check_delta(d)?;
    }
    Ok(())
}

/// Free energies for a PEC first body and a second body of duality angle delta.
pub fn free_energy_deltas(
    geom: &Geometry,
    deltas: &[f64],
    thermal: ThermalState,
    disc: &Discretization,
) -> Result<Vec<EnergyReport>> {
    check_deltas(deltas)?;
    let rels: Vec<f64> = deltas.iter().map(|d| -d).collect();
    let out = run(geom, &rels, &[0.0], thermal, disc)?;
    Ok((0..deltas.len())
        .map(|i| EnergyReport {
            free_energy: out.hc.as_ref().map(|v| v[i]),
            free_energy_kt: out.kt.as_ref().map(|v| v[i]),
            per_n: out.per_n[i].clone(),
            convergence: out.conv.clone(),
        })
        .collect())
}

pub fn free_energy(
    geom: &Geometry,
    mat1: PemcMaterial,
    mat2: PemcMaterial,
    thermal: ThermalState,
    disc: &Discretization,
) -> Result<EnergyReport> {
    let out = run(geom, &[mat1.theta() - mat2.theta()], &[0.0], thermal, disc)?;
    Ok(EnergyReport {
        free_energy: out.hc.as_ref().map(|v| v[0]),
        free_energy_kt: out.kt.as_ref().map(|v| v[0]),
        per_n: out.per_n[0].clone(),
        convergence: out.conv,
    })
}

fn forces_rel(geom: &Geometry, rels: &[f64], thermal: ThermalState, disc: &Discretization) -> Result<Vec<ForceReport>> {
    let h = disc.force_step.max(disc.force_step_min / geom.l());
    if !(h > 0.0 && h < 0.1) {
        return invalid(format!("force step {h} (relative to L) out of range"));
    }
    let offsets = [0.0, -h, h];
    let out = run(geom, rels, &offsets, thermal, disc)?;
    let no = offsets.len();
    let deriv = |v: &[f64], i: usize| -> (f64, bool) {
        let e = &v[i * no..(i + 1) * no];
        let noisy = (e[2] - e[1]).abs() < 1e-12 * e[0].abs();
        (-(e[2] - e[1]) / (2.0 * h), noisy)
    };
    Ok((0..rels.len())
        .map(|i| {
            let mut conv = out.conv.clone();
            let force = out.hc.as_ref().map(|v| deriv(v, i));
            let force_kt = out.kt.as_ref().map(|v| deriv(v, i));
            if force.is_some_and(|f| f.1) || force_kt.is_some_and(|f| f.1) {
                conv.warnings.push("force below finite-difference precision".into());
            }
            ForceReport {
                force: force.map(|f| f.0),
                force_kt: force_kt.map(|f| f.0),
                energy: EnergyReport {
                    free_energy: out.hc.as_ref().map(|v| v[i * no]),
                    free_energy_kt: out.kt.as_ref().map(|v| v[i * no]),
                    per_n: out.per_n[i * no].clone(),
                    convergence: conv,
                },
            }
        })
        .collect())
}

/// Forces for a PEC first body and a second body of duality angle delta.
pub fn force_deltas(geom: &Geometry, deltas: &[f64], thermal: ThermalState, disc: &Discretization) -> Result<Vec<ForceReport>> {
    check_deltas(deltas)?;
    let rels: Vec<f64> = deltas.iter().map(|d| -d).collect();
    forces_rel(geom, &rels, thermal, disc)
}

pub fn force(
    geom: &Geometry,
    mat1: PemcMaterial,
    mat2: PemcMaterial,
    thermal: ThermalState,
    disc: &Discretization,
) -> Result<ForceReport> {
    Ok(forces_rel(geom, &[mat1.theta() - mat2.theta()], thermal, disc)?.remove(0))
}
