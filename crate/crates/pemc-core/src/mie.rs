//! Mie coefficients at imaginary frequency for biisotropic and PEMC spheres, and the
//! amplitude scattering matrix in the (TM, TE) basis.

use crate::error::{invalid, Error, Result};
use crate::specfun::{bessel_ratio_i_complex, SphericalBesselTable};
use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

/// Biisotropic constitutive parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiisotropicParams {
    pub eps: Complex64,
    pub mu: Complex64,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl BiisotropicParams {
    pub fn isotropic(eps: f64, mu: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            eps: Complex64::new(eps, 0.0),
            mu: Complex64::new(mu, 0.0),
            alpha: z,
            beta: z,
        }
    }
}

/// Perfect electromagnetic conductor labelled by its angle in [0, pi/2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PemcMaterial {
    theta: f64,
}

impl PemcMaterial {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2 + 1e-15).contains(&theta) {
            return invalid(format!("PEMC angle must lie in [0, pi/2], got {theta}"));
        }
        Ok(Self { theta: theta.min(FRAC_PI_2) })
    }

    pub fn pec() -> Self {
        Self { theta: 0.0 }
    }

    pub fn pmc() -> Self {
        Self { theta: FRAC_PI_2 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Duality rotation D(theta).
pub fn duality_matrix(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, s], [-s, c]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MieBlock<T> {
    pub ee: T,
    pub mm: T,
    pub em: T,
    pub me: T,
}

impl MieBlock<f64> {
    pub fn as_matrix(&self) -> [[f64; 2]; 2] {
        [[self.ee, self.em], [self.me, self.mm]]
    }
}

fn check_order(ell: usize, xi: f64) -> Result<()> {
    if ell < 1 {
        return invalid("multipole order must be >= 1");
    }
    if !(xi > 0.0) || !xi.is_finite() {
        return invalid(format!("size parameter must be positive, got {xi}"));
    }
    Ok(())
}

/// ln|C_l|, {I}, {K} for one order.
fn order_data(ell: usize, xi: f64) -> Result<(f64, f64, f64)> {
    let t = SphericalBesselTable::new(xi, ell)?;
    let ln_c = (PI / 2.0).ln() + t.ln_i[ell] - t.ln_k[ell];
    Ok((ln_c, t.log_i[ell], t.log_k[ell]))
}

fn parity(ell: usize) -> f64 {
    if ell % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn mie_biisotropic(ell: usize, xi: f64, p: &BiisotropicParams) -> Result<MieBlock<Complex64>> {
    check_order(ell, xi)?;
    let (ln_c, bi, bk) = order_data(ell, xi)?;
    let c = Complex64::new(parity(ell) * ln_c.exp(), 0.0);
    let i = Complex64::i();
    let kappa = (p.beta + p.alpha) / 2.0;
    let root = (p.eps * p.mu - kappa * kappa).sqrt();
    let m_l = root + i * (p.beta - p.alpha) / 2.0;
    let m_r = root - i * (p.beta - p.alpha) / 2.0;
    let m_p = (root - i * kappa) / p.eps;
    let m_m = (root + i * kappa) / p.eps;
    if m_l.norm() == 0.0 || m_r.norm() == 0.0 {
        return invalid("vanishing refractive index");
    }
    let il = bessel_ratio_i_complex(ell, xi * m_l)?;
    let ir = bessel_ratio_i_complex(ell, xi * m_r)?;
    let bi = Complex64::new(bi, 0.0);
    let bk = Complex64::new(bk, 0.0);
    // L pairs with m_-, R with m_+
    let a_l = bi - m_m * il;
    let a_r = bi - m_p * ir;
    let b_l = m_m * bi - il;
    let b_r = m_p * bi - ir;
    let v_l = m_m * il - bk;
    let v_r = m_p * ir - bk;
    let w_l = il - m_m * bk;
    let w_r = ir - m_p * bk;
    let den = v_r * w_l + v_l * w_r;
    let mix = i * c * (bi - bk) / den;
    let out = MieBlock {
        ee: c * (w_r * a_l + w_l * a_r) / den,
        mm: c * (v_r * b_l + v_l * b_r) / den,
        me: mix * (m_m * ir - m_p * il),
        em: mix * (m_m * il - m_p * ir),
    };
    if !(out.ee.is_finite() && out.mm.is_finite() && out.em.is_finite() && out.me.is_finite()) {
        return Err(Error::NoConvergence("non-finite Mie coefficient".into()));
    }
    Ok(out)
}

pub fn mie_pemc(ell: usize, xi: f64, mat: PemcMaterial) -> Result<MieBlock<f64>> {
    check_order(ell, xi)?;
    let (ln_c, bi, bk) = order_data(ell, xi)?;
    let c = parity(ell) * ln_c.exp();
    let q = bi / bk;
    let (s, co) = mat.theta.sin_cos();
    let mix = c * (q - 1.0) * s * co;
    Ok(MieBlock {
        ee: -c * (co * co * q + s * s),
        mm: -c * (co * co + s * s * q),
        em: mix,
        me: mix,
    })
}

/// Leading small-size behaviour of the l = 1 block.
pub fn mie_dipole_limit(xi: f64, mat: PemcMaterial) -> [[f64; 2]; 2] {
    let pre = xi.powi(3) / 6.0;
    let (s2, c2) = (2.0 * mat.theta).sin_cos();
    [[pre * (1.0 + 3.0 * c2), pre * 3.0 * s2], [pre * 3.0 * s2, pre * (1.0 - 3.0 * c2)]]
}

/// Angle functions pi_l(z), tau_l(z) for l = 0..=lmax.
pub fn angular_functions(lmax: usize, z: f64) -> (Vec<f64>, Vec<f64>) {
    let mut pi = vec![0.0; lmax + 1];
    let mut tau = vec![0.0; lmax + 1];
    if lmax >= 1 {
        pi[1] = 1.0;
        tau[1] = z;
    }
    for l in 2..=lmax {
        let lf = l as f64;
        pi[l] = (2.0 * lf - 1.0) / (lf - 1.0) * z * pi[l - 1] - lf / (lf - 1.0) * pi[l - 2];
        tau[l] = lf * z * pi[l] - (lf + 1.0) * pi[l - 1];
    }
    (pi, tau)
}

/// PEC amplitudes in log form for z = -x <= -1: returns (ln S_TM, ln(-S_TE)).
pub fn pec_amplitudes_log(table: &SphericalBesselTable, x: f64) -> Result<(f64, f64)> {
    if !(x >= 1.0) {
        return invalid(format!("log amplitudes need z <= -1, got z = {}", -x));
    }
    let lmax = table.lmax();
    let ln_half_pi = (PI / 2.0).ln();
    let mut p_prev = 0.0;
    let mut p_cur = 1.0;
    let mut scale = 0.0;
    let mut ref_par = f64::NEG_INFINITY;
    let mut ref_perp = f64::NEG_INFINITY;
    let mut sum_par = 0.0;
    let mut sum_perp = 0.0;
    let mut last = f64::NEG_INFINITY;
    for l in 1..=lmax {
        let lf = l as f64;
        if l >= 2 {
            let next = (2.0 * lf - 1.0) / (lf - 1.0) * x * p_cur - lf / (lf - 1.0) * p_prev;
            p_prev = p_cur;
            p_cur = next;
            if p_cur > 1e150 {
                scale += p_cur.ln();
                p_prev /= p_cur;
                p_cur = 1.0;
            }
        }
        let tau = lf * x * p_cur - (lf + 1.0) * p_prev;
        let q = -table.log_i[l] / table.log_k[l];
        let ln_pre = ((2.0 * lf + 1.0) / (lf * (lf + 1.0))).ln() + ln_half_pi + table.ln_i[l] - table.ln_k[l] + scale;
        let t_par = ln_pre + (q * tau + p_cur).ln();
        let t_perp = ln_pre + (tau + q * p_cur).ln();
        if t_par > ref_par {
            sum_par = sum_par * (ref_par - t_par).exp() + 1.0;
            ref_par = t_par;
        } else {
            sum_par += (t_par - ref_par).exp();
        }
        if t_perp > ref_perp {
            sum_perp = sum_perp * (ref_perp - t_perp).exp() + 1.0;
            ref_perp = t_perp;
        } else {
            sum_perp += (t_perp - ref_perp).exp();
        }
        let t = t_par.max(t_perp);
        if l > 2 && t < last && t < ref_par.min(ref_perp) - 40.0 {
            return Ok((ref_par + sum_par.ln(), ref_perp + sum_perp.ln()));
        }
        last = t;
    }
    Err(Error::NoConvergence(format!(
        "multipole sum not converged at lmax = {lmax} (xi = {}, z = {})",
        table.x, -x
    )))
}

/// Multipole cutoff estimate for amplitudes at size xi and z = -x.
pub fn lmax_estimate(xi: f64, x: f64) -> usize {
    let chi = xi * (2.0 * (x - 1.0).max(0.0)).sqrt();
    (1.2 * chi + 8.0 * chi.sqrt() + 3.0 * xi + 20.0).ceil() as usize
}

/// Amplitude scattering matrix S_{p,p'} of a PEMC sphere in the (TM, TE) basis.
pub fn amplitude_scattering(ell_max: Option<usize>, z: f64, xi: f64, mat: PemcMaterial) -> Result<[[f64; 2]; 2]> {
    if !(xi > 0.0) || !xi.is_finite() || !z.is_finite() {
        return invalid("amplitude_scattering needs xi > 0 and finite z");
    }
    if z > 1.0 {
        return invalid(format!("amplitude_scattering needs z <= 1, got {z}"));
    }
    let (par, perp) = if z <= -1.0 {
        let mut lmax = ell_max.unwrap_or_else(|| lmax_estimate(xi, -z)).max(4);
        loop {
            let table = SphericalBesselTable::new(xi, lmax)?;
            match pec_amplitudes_log(&table, -z) {
                Ok((a, b)) if a.max(b) > 700.0 => {
                    return invalid("amplitude overflows f64, use pec_amplitudes_log");
                }
                Ok((a, b)) => break (a.exp(), -b.exp()),
                Err(e) if ell_max.is_some() => return Err(e),
                Err(_) if lmax > 1 << 22 => {
                    return Err(Error::NoConvergence("multipole cutoff exceeded".into()));
                }
                Err(_) => lmax *= 2,
            }
        }
    } else {
        let lmax = ell_max.unwrap_or((3.0 * xi + 10.0).ceil() as usize + 20).max(4);
        let table = SphericalBesselTable::new(xi, lmax)?;
        let (pi, tau) = angular_functions(lmax, z);
        let mut par = 0.0;
        let mut perp = 0.0;
        for l in 1..=lmax {
            let lf = l as f64;
            let c = parity(l) * (PI / 2.0) * (table.ln_i[l] - table.ln_k[l]).exp();
            let ree = -c * table.log_i[l] / table.log_k[l];
            let rmm = -c;
            let w = (2.0 * lf + 1.0) / (lf * (lf + 1.0));
            par += w * (ree * tau[l] + rmm * pi[l]);
            perp += w * (rmm * tau[l] + ree * pi[l]);
        }
        (par, perp)
    };
    Ok(rotate_diag(par, perp, mat.theta))
}

/// D diag(a, b) D^{-1}.
pub fn rotate_diag(a: f64, b: f64, theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    let off = s * c * (b - a);
    [[c * c * a + s * s * b, off], [off, s * s * a + c * c * b]]
}

/// Zero-frequency PEC amplitudes divided by xi R/c: (S_TM, S_TE).
pub fn zero_frequency_amplitudes(chi: f64) -> (f64, f64) {
    let chi = chi.abs();
    let tm = 2.0 * (0.5 * chi).sinh().powi(2);
    (tm, -zero_frequency_te(chi))
}

/// cosh(chi) - 2 int_0^1 t cosh(t chi) dt
fn zero_frequency_te(chi: f64) -> f64 {
    if chi < 2.0 {
        let c2 = chi * chi;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..40 {
            let kf = k as f64;
            term *= c2 / ((2.0 * kf - 1.0) * (2.0 * kf));
            let t = term * kf / (kf + 1.0);
            sum += t;
            if t < 1e-18 * sum {
                break;
            }
        }
        sum
    } else {
        chi.cosh() - 2.0 * (chi * chi.sinh() - chi.cosh() + 1.0) / (chi * chi)
    }
}

/// ln of the zero-frequency amplitudes: (ln S_TM, ln(-S_TE)) per unit xi R/c.
pub fn zero_frequency_amplitudes_log(chi: f64) -> (f64, f64) {
    let chi = chi.abs();
    if chi < 2.0 {
        let (a, b) = zero_frequency_amplitudes(chi);
        return (a.ln(), (-b).ln());
    }
    let e = (-2.0 * chi).exp();
    let em = (-chi).exp();
    // e^{-chi} times each bracket
    let tm = 0.5 * (1.0 - em).powi(2);
    let te = 0.5 * (1.0 + e) - (chi * (1.0 - e) - (1.0 + e) + 2.0 * em) / (chi * chi);
    (chi + tm.ln(), chi + te.ln())
}
