//! Special functions: modified spherical Bessel log-derivatives, polylogarithms
//! on and inside the unit circle, Bernoulli polynomials and integer zeta values.

use crate::error::{invalid, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

pub const ZETA3: f64 = 1.202_056_903_159_594_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    I,
    K,
}

/// Logarithmic derivative {F, z} = F'_{l+1/2}(z)/F_{l+1/2}(z) + 1/(2z).
pub fn bessel_ratio(kind: BesselKind, ell: usize, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return invalid(format!("bessel_ratio needs z > 0, got {z}"));
    }
    if ell < 1 {
        return invalid("bessel_ratio needs ell >= 1");
    }
    Ok(match kind {
        BesselKind::I => i_ratio(ell, z) + (ell as f64 + 1.0) / z,
        BesselKind::K => {
            let mut r = 1.0 + 1.0 / z;
            for j in 1..ell {
                r = 1.0 / r + (2.0 * j as f64 + 1.0) / z;
            }
            -1.0 / r - ell as f64 / z
        }
    })
}

/// I_{nu+1}/I_nu with nu = ell + 1/2, by the modified Lentz method.
fn i_ratio(ell: usize, z: f64) -> f64 {
    let nu = ell as f64 + 0.5;
    let tiny = 1e-300;
    let b = |k: f64| 2.0 * (nu + k) / z;
    let mut g = b(1.0);
    let mut c = g;
    let mut d = 0.0;
    let mut k = 2.0;
    loop {
        let bk = b(k);
        d += bk;
        if d == 0.0 {
            d = tiny;
        }
        c = bk + 1.0 / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        g *= delta;
        if (delta - 1.0).abs() < 1e-16 || k > 1e7 {
            break;
        }
        k += 1.0;
    }
    1.0 / g
}

/// Complex-argument I ratio I_{nu+1}(w)/I_nu(w), nu = ell + 1/2.
fn i_ratio_complex(ell: usize, w: Complex64) -> Complex64 {
    let nu = ell as f64 + 0.5;
    let tiny = Complex64::new(1e-300, 0.0);
    // evaluate 1/(b1 + 1/(b2 + ...)) as Lentz on g = b1 + 1/(b2 + ...)
    let b = |k: f64| 2.0 * (nu + k) / w;
    let mut g = b(1.0);
    if g.norm() == 0.0 {
        g = tiny;
    }
    let mut c = g;
    let mut d = Complex64::new(0.0, 0.0);
    let mut k = 2.0;
    loop {
        let bk = b(k);
        d = bk + d;
        if d.norm() == 0.0 {
            d = tiny;
        }
        c = bk + 1.0 / c;
        if c.norm() == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        g *= delta;
        if (delta - 1.0).norm() < 1e-16 || k > 1e7 {
            break;
        }
        k += 1.0;
    }
    1.0 / g
}

/// {I, w} for complex argument.
pub fn bessel_ratio_i_complex(ell: usize, w: Complex64) -> Result<Complex64> {
    if ell < 1 || w.norm() == 0.0 || !w.is_finite() {
        return invalid("bessel_ratio_i_complex needs ell >= 1 and w != 0");
    }
    Ok(i_ratio_complex(ell, w) + (ell as f64 + 1.0) / w)
}

fn ln_sinh(x: f64) -> f64 {
    if x < 1.0 {
        x.sinh().ln()
    } else {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    }
}

/// Modified spherical Bessel data at a fixed real argument for orders 1/2 ... lmax + 1/2.
#[derive(Debug, Clone)]
pub struct SphericalBesselTable {
    pub x: f64,
    /// ln I_{l+1/2}(x), l = 0..=lmax
    pub ln_i: Vec<f64>,
    /// ln K_{l+1/2}(x)
    pub ln_k: Vec<f64>,
    /// {I, x}, entry 0 unused
    pub log_i: Vec<f64>,
    /// {K, x}, entry 0 unused
    pub log_k: Vec<f64>,
}

impl SphericalBesselTable {
    pub fn new(x: f64, lmax: usize) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return invalid(format!("bessel table needs x > 0, got {x}"));
        }
        let n = lmax + 1;
        // rho[l] = I_{l+3/2}/I_{l+1/2}, downward from a continued fraction start
        let mut rho = vec![0.0; n];
        rho[lmax] = i_ratio(lmax.max(1), x);
        if lmax == 0 {
            rho[0] = 1.0 / x.tanh() - 1.0 / x;
        }
        for l in (0..lmax).rev() {
            let nu1 = l as f64 + 1.5;
            rho[l] = 1.0 / (2.0 * nu1 / x + rho[l + 1]);
        }
        // r[l] = K_{l+3/2}/K_{l+1/2}, upward
        let mut r = vec![0.0; n];
        r[0] = 1.0 + 1.0 / x;
        for l in 1..n {
            r[l] = 1.0 / r[l - 1] + (2.0 * l as f64 + 1.0) / x;
        }
        let mut ln_i = vec![0.0; n];
        let mut ln_k = vec![0.0; n];
        ln_i[0] = 0.5 * (2.0 / (PI * x)).ln() + ln_sinh(x);
        ln_k[0] = 0.5 * (PI / (2.0 * x)).ln() - x;
        for l in 1..n {
            ln_i[l] = ln_i[l - 1] + rho[l - 1].ln();
            ln_k[l] = ln_k[l - 1] + r[l - 1].ln();
        }
        let mut log_i = vec![0.0; n];
        let mut log_k = vec![0.0; n];
        for l in 1..n {
            log_i[l] = rho[l] + (l as f64 + 1.0) / x;
            log_k[l] = -1.0 / r[l - 1] - l as f64 / x;
        }
        Ok(Self {
            x,
            ln_i,
            ln_k,
            log_i,
            log_k,
        })
    }

    pub fn lmax(&self) -> usize {
        self.ln_i.len() - 1
    }
}

/// Harmonic number H_n.
fn harmonic(n: u32) -> f64 {
    (1..=n).map(|k| 1.0 / k as f64).sum()
}

/// Riemann zeta at an integer s >= 2.
pub fn zeta_int(s: u32) -> f64 {
    match s {
        0 | 1 => f64::NAN,
        2 => PI * PI / 6.0,
        3 => ZETA3,
        4 => PI.powi(4) / 90.0,
        _ => {
            let n = 30u32;
            let sf = s as f64;
            let mut sum = 0.0;
            for k in (1..n).rev() {
                sum += (k as f64).powf(-sf);
            }
            let nf = n as f64;
            sum + nf.powf(1.0 - sf) / (sf - 1.0) + 0.5 * nf.powf(-sf) + sf * nf.powf(-sf - 1.0) / 12.0
                - sf * (sf + 1.0) * (sf + 2.0) * nf.powf(-sf - 3.0) / 720.0
                + sf * (sf + 1.0) * (sf + 2.0) * (sf + 3.0) * (sf + 4.0) * nf.powf(-sf - 5.0) / 30240.0
        }
    }
}

/// Li_s(e^mu) from its expansion in powers of mu, valid for |mu| < 2 pi.
fn polylog_log_series(s: u32, mu: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0);
    let mut fact = 1.0;
    for k in 0..s.saturating_sub(1) {
        if k > 0 {
            pow *= mu;
            fact *= k as f64;
        }
        sum += zeta_int(s - k) * pow / fact;
    }
    // mu^{s-1}/(s-1)!
    let km = s - 1;
    if km > 0 {
        pow *= mu;
        fact *= km as f64;
    }
    let lead = pow / fact;
    sum += lead * (harmonic(km) - (-mu).ln());
    // zeta(0) mu^s / s!
    let mu_s = lead * mu / s as f64;
    sum += -0.5 * mu_s;
    // odd n: zeta(-n) mu^{s+n}/(s+n)!
    let two_pi = 2.0 * PI;
    let mu2 = mu * mu;
    let mut term_pow = mu_s * mu; // mu^{s+1}/s!
    let mut n = 1u32;
    loop {
        // n!/(s+n)! relative to 1/s!
        let mut ratio = 1.0;
        for j in 1..=n {
            ratio *= j as f64 / (s + j) as f64;
        }
        let sign = if (n + 1) / 2 % 2 == 1 { -1.0 } else { 1.0 };
        let z = sign * 2.0 * zeta_int(n + 1) / two_pi.powi(n as i32 + 1);
        let term = term_pow * (ratio * z);
        sum += term;
        if term.norm() < 1e-17 * sum.norm().max(1e-300) || n > 400 {
            break;
        }
        term_pow *= mu2;
        n += 2;
    }
    sum
}

/// Re Li_s(e^{i phi}) = sum_k cos(k phi)/k^s.
pub fn re_polylog_circle(s: u32, phi: f64) -> Result<f64> {
    if s < 2 {
        return invalid("re_polylog_circle needs s >= 2");
    }
    if !phi.is_finite() {
        return invalid("re_polylog_circle needs finite phi");
    }
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p = 2.0 * PI - p;
    }
    if p == 0.0 {
        return Ok(zeta_int(s));
    }
    Ok(polylog_log_series(s, Complex64::new(0.0, p)).re)
}

/// Li_s(z) for |z| < 1.
pub fn polylog_disk(s: u32, z: Complex64) -> Result<Complex64> {
    if s < 2 {
        return invalid("polylog_disk needs s >= 2");
    }
    let r = z.norm();
    if !(r < 1.0) {
        return invalid(format!("polylog_disk needs |z| < 1, got {r}"));
    }
    if r == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if r <= 0.5 {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut zk = Complex64::new(1.0, 0.0);
        let mut k = 1u32;
        loop {
            zk *= z;
            let kf = k as f64;
            sum += zk / kf.powi(s as i32);
            let tail = zk.norm() * r / ((kf + 1.0).powi(s as i32) * (1.0 - r));
            if tail < 1e-17 * sum.norm() {
                break;
            }
            k += 1;
        }
        return Ok(sum);
    }
    let mut li = polylog_log_series(s, z.ln());
    if z.im == 0.0 {
        li.im = 0.0;
    }
    Ok(li)
}

/// Bernoulli polynomials B_2, B_3, B_4.
pub fn bernoulli_poly(n: u32, x: f64) -> Result<f64> {
    match n {
        2 => Ok(x * x - x + 1.0 / 6.0),
        3 => Ok(x * x * x - 1.5 * x * x + 0.5 * x),
        4 => Ok(x * x * x * x - 2.0 * x * x * x + x * x - 1.0 / 30.0),
        _ => invalid(format!("bernoulli_poly supports n in 2..=4, got {n}")),
    }
}
