//! Quadrature rules and a bracketing root finder.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess
        let th = PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut t = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * th.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = nf * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let m = 0.5 * (b + a);
    (x.iter().map(|t| m + h * t).collect(), w.iter().map(|v| h * v).collect())
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The 15 abscissae of the Gauss-Kronrod rule on [a, b].
pub fn kronrod_nodes(a: f64, b: f64) -> [f64; 15] {
    let h = 0.5 * (b - a);
    let m = 0.5 * (b + a);
    let mut xs = [0.0; 15];
    for j in 0..7 {
        xs[j] = m - h * GK_X[j];
        xs[14 - j] = m + h * GK_X[j];
    }
    xs[7] = m;
    xs
}

/// Apply the 15-point Kronrod and embedded 7-point Gauss rule to values at
/// `kronrod_nodes(a, b)`; returns (kronrod, |kronrod - gauss|) per component.
pub fn kronrod_apply(a: f64, b: f64, vals: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let h = 0.5 * (b - a);
    let dim = vals[0].len();
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for d in 0..dim {
        let mut sk = GK_WK[7] * vals[7][d];
        let mut sg = GK_WG[3] * vals[7][d];
        for j in 0..7 {
            let pair = vals[j][d] + vals[14 - j][d];
            sk += GK_WK[j] * pair;
            if j % 2 == 1 {
                sg += GK_WG[j / 2] * pair;
            }
        }
        k[d] = h * sk;
        g[d] = h * sg;
    }
    let err = k.iter().zip(&g).map(|(a, b)| (a - b).abs()).collect();
    (k, err)
}

/// Adaptive Gauss-Kronrod integration of a vector-valued function on [a, b].
/// `f` receives all nodes of a panel at once. Convergence is judged on the
/// component-wise error against `abs_tol + rel_tol * |I|` (max over components).
pub fn adaptive_gk<F>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64, max_panels: usize) -> Result<(Vec<f64>, usize)>
where
    F: FnMut(&[f64]) -> Result<Vec<Vec<f64>>>,
{
    adaptive_gk_with(f, a, b, max_panels, |total| total.iter().map(|t| abs_tol + rel_tol * t.abs()).collect())
}

/// Like [`adaptive_gk`], but every component is held to `rel_tol` times the
/// largest component magnitude.
pub fn adaptive_gk_common<F>(f: F, a: f64, b: f64, rel_tol: f64, max_panels: usize) -> Result<(Vec<f64>, usize)>
where
    F: FnMut(&[f64]) -> Result<Vec<Vec<f64>>>,
{
    adaptive_gk_with(f, a, b, max_panels, |total| {
        let s = total.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        vec![(rel_tol * s).max(f64::MIN_POSITIVE); total.len()]
    })
}

fn adaptive_gk_with<F, T>(mut f: F, a: f64, b: f64, max_panels: usize, tol: T) -> Result<(Vec<f64>, usize)>
where
    F: FnMut(&[f64]) -> Result<Vec<Vec<f64>>>,
    T: Fn(&[f64]) -> Vec<f64>,
{
    struct Panel {
        a: f64,
        b: f64,
        val: Vec<f64>,
        err: Vec<f64>,
    }
    let eval = |f: &mut F, a: f64, b: f64| -> Result<Panel> {
        let xs = kronrod_nodes(a, b);
        let vals = f(&xs)?;
        let (val, err) = kronrod_apply(a, b, &vals);
        Ok(Panel { a, b, val, err })
    };
    let mut panels = vec![eval(&mut f, a, b)?];
    loop {
        let dim = panels[0].val.len();
        let total: Vec<f64> = (0..dim).map(|d| panels.iter().map(|p| p.val[d]).sum()).collect();
        let errs: Vec<f64> = (0..dim).map(|d| panels.iter().map(|p| p.err[d]).sum()).collect();
        let scale = tol(&total);
        if (0..dim).all(|d| errs[d] <= scale[d]) {
            return Ok((total, panels.len()));
        }
        if panels.len() >= max_panels {
            return Err(Error::NoConvergence(format!(
                "adaptive quadrature: {} panels, error {:?} vs value {:?}",
                panels.len(),
                errs,
                total
            )));
        }
        // split the panel with the largest scaled error
        let worst = panels
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (0..dim).map(|d| p.err[d] / scale[d]).fold(0.0, f64::max)))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(i, _)| i)
            .unwrap();
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(eval(&mut f, p.a, mid)?);
        panels.push(eval(&mut f, mid, p.b)?);
    }
}

/// Brent's method on a bracket with f(a) f(b) <= 0.
pub fn brent<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Result<f64> {
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoConvergence(format!("root not bracketed in [{a}, {b}]")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0)), (q - 1.0) * (r - 1.0) * (s - 1.0))
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Err(Error::NoConvergence("brent: iteration limit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        for n in [1usize, 2, 5, 16, 64, 301] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let deg = (2 * n - 1).min(40) as i32;
            let exact = if deg % 2 == 0 { 2.0 / (deg as f64 + 1.0) } else { 0.0 };
            let q: f64 = x.iter().zip(&w).map(|(t, v)| v * t.powi(deg)).sum();
            assert!((q - exact).abs() < 1e-13, "n={n} deg={deg} q={q}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn kronrod_exact_for_smooth() {
        let (v, _) = adaptive_gk(|xs| Ok(xs.iter().map(|x| vec![x.exp(), x.cos()]).collect()), 0.0, 2.0, 1e-13, 0.0, 50).unwrap();
        assert_relative_eq!(v[0], 2f64.exp() - 1.0, max_relative = 1e-13);
        assert_relative_eq!(v[1], 2f64.sin(), max_relative = 1e-13);
    }

    #[test]
    fn adaptive_handles_peak() {
        let (v, n) = adaptive_gk(|xs| Ok(xs.iter().map(|x| vec![1.0 / (1e-4 + x * x)]).collect()), -1.0, 1.0, 1e-10, 0.0, 500).unwrap();
        assert_relative_eq!(v[0], 2.0 * 100.0 * (100.0f64).atan(), max_relative = 1e-9);
        assert!(n > 2);
    }

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| Ok(x * x * x - 2.0), 0.0, 3.0, 1e-14, 100).unwrap();
        assert_relative_eq!(r, 2f64.cbrt(), epsilon = 1e-13);
        assert!(brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 100).is_err());
    }
}
