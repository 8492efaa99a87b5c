//! Zero-frequency (high-temperature) closed forms: single round-trip traces for
//! PEC-PEC and PEC-PMC pairs, the sphere-plane limit, the rational model for the
//! ratio of the exact and single round-trip free energies, and the sphere-plane
//! double round trip.

use crate::error::{invalid, Result};
use std::sync::OnceLock;

/// Conformal description of a two-body geometry at zero frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalGeometry {
    ym1: f64,
    u: f64,
}

impl ConformalGeometry {
    pub fn new(y: f64, u: f64) -> Result<Self> {
        Self::from_y_minus_one(y - 1.0, u)
    }

    /// Construct from y - 1, which keeps full precision near contact.
    pub fn from_y_minus_one(ym1: f64, u: f64) -> Result<Self> {
        if !(ym1 > 0.0) || !ym1.is_finite() {
            return invalid(format!("need y > 1, got y - 1 = {ym1}"));
        }
        if !(0.0..=0.25).contains(&u) {
            return invalid(format!("need 0 <= u <= 1/4, got {u}"));
        }
        Ok(Self { ym1, u })
    }

    /// From the aspect ratio x = L/R_eff.
    pub fn from_x(x: f64, u: f64) -> Result<Self> {
        Self::from_y_minus_one(x + 0.5 * u * x * x, u)
    }

    pub fn y(&self) -> f64 {
        1.0 + self.ym1
    }

    pub fn y_minus_one(&self) -> f64 {
        self.ym1
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    /// y^2 - 1
    fn y2m1(&self) -> f64 {
        self.ym1 * (self.ym1 + 2.0)
    }

    /// (alpha_+, alpha_-); alpha_+ alpha_- = 1. None for u = 0.
    pub fn alphas(&self) -> Option<(f64, f64)> {
        if self.u == 0.0 {
            return None;
        }
        let u = self.u;
        let ap = (1.0 - 2.0 * u + (1.0 - 4.0 * u).max(0.0).sqrt()) / (2.0 * u);
        Some((ap, 1.0 / ap))
    }

    /// z = 2y + alpha_+ + alpha_-; infinite for u = 0.
    pub fn z(&self) -> f64 {
        match self.alphas() {
            Some((ap, am)) => 2.0 * self.y() + ap + am,
            None => f64::INFINITY,
        }
    }
}

/// Shared structure of the two u > 0 closed forms; `k` is 1/6 or 1/2.
fn closed_form_sum(g: &ConformalGeometry, k: f64) -> f64 {
    let (ap, am) = g.alphas().expect("u > 0");
    let y = g.y();
    let y2m1 = g.y2m1();
    let mut s = 0.0;
    for a in [ap, am] {
        // alpha z, using alpha_+ alpha_- = 1
        let az = a * a + 2.0 * a * y + 1.0;
        let r = az.sqrt();
        let big_a = 2.0 * y2m1 + a * y + 1.0;
        let ratio = r / big_a;
        let lg = if ratio < 0.5 {
            2.0 * ratio.atanh()
        } else {
            2.0 * ((big_a + r) / (2.0 * y + a)).ln() - y2m1.ln()
        };
        s += 1.0 / (2.0 * y + a) - k * lg / (a * r);
    }
    s
}

/// log(z^2 (y^2 - 1) / (y z + 1/2)^2)
fn big_log(g: &ConformalGeometry) -> f64 {
    let z = g.z();
    let y = g.y();
    if y > 2.0 {
        (-1.0 / (y * y)).ln_1p() - 2.0 * (0.5 / (y * z)).ln_1p()
    } else {
        g.y2m1().ln() - 2.0 * (y + 0.5 / z).ln()
    }
}

/// Single round-trip trace for a PEC-PEC pair at zero frequency.
pub fn tr_m_pec_pec(y: f64, u: f64) -> Result<f64> {
    Ok(tr_m_pec_pec_at(&ConformalGeometry::new(y, u)?))
}

pub fn tr_m_pec_pec_at(g: &ConformalGeometry) -> f64 {
    if g.u == 0.0 {
        return sphere_plane(g);
    }
    let y = g.y();
    let z = g.z();
    y / g.y2m1() + 1.0 / z + z / 6.0 * big_log(g) - closed_form_sum(g, 1.0 / 6.0)
}

/// Single round-trip trace for a PEC-PMC pair at zero frequency.
pub fn tr_m_pec_pmc(y: f64, u: f64) -> Result<f64> {
    Ok(tr_m_pec_pmc_at(&ConformalGeometry::new(y, u)?))
}

pub fn tr_m_pec_pmc_at(g: &ConformalGeometry) -> f64 {
    if g.u == 0.0 {
        return sphere_plane(g);
    }
    let y = g.y();
    let z = g.z();
    y / g.y2m1() + 0.5 * (z - 2.0 * y) * big_log(g) - closed_form_sum(g, 0.5)
}

/// Sphere-plane single round-trip trace, shared by both material pairs.
pub fn tr_m_sphere_plane(y: f64) -> Result<f64> {
    Ok(sphere_plane(&ConformalGeometry::new(y, 0.0)?))
}

fn sphere_plane(g: &ConformalGeometry) -> f64 {
    let y = g.y();
    if y > 10.0 {
        let w = 1.0 / (y * y);
        let mut wk = 1.0;
        let mut s = 0.0;
        for k in 1..40 {
            wk *= w;
            let kf = k as f64;
            let t = wk * (2.0 * kf + 1.0) / (2.0 * kf + 2.0);
            s += t;
            if t < 1e-17 * s {
                break;
            }
        }
        return s / y;
    }
    let y2m1 = g.y2m1();
    y / y2m1 - 0.5 / y + 0.5 * y * (y2m1.ln() - 2.0 * y.ln())
}

/// Single round-trip trace for a mismatch angle delta.
pub fn tr_m_single(delta: f64, g: &ConformalGeometry) -> f64 {
    let (s, c) = delta.sin_cos();
    c * c * tr_m_pec_pec_at(g) - s * s * tr_m_pec_pmc_at(g)
}

/// Single round-trip high-temperature free energy in units of k_B T.
pub fn single_roundtrip_high_t(delta: f64, y: f64, u: f64) -> Result<f64> {
    let g = ConformalGeometry::new(y, u)?;
    Ok(-0.5 * tr_m_single(delta, &g))
}

/// Taylor coefficients of the double round-trip traces in w = 1/y^2,
/// starting at w^3.
const DOUBLE_PEC_SERIES: [f64; 26] = [
    0.1171875, 0.15625, 0.17393663194444445, 0.1845703125,
    0.1921844482421875, 0.1981174045138889, 0.20293350219726564, 0.20693588256835938,
    0.21031698158809117, 0.2132105827331543, 0.21571425582681383, 0.21790122709892415,
    0.21982758434023708, 0.2215370014309883, 0.22306397294736174, 0.2244360901964163,
    0.2256756756683899, 0.2268009767991556, 0.22782705099732745, 0.2287664307380055,
    0.22962962962960118, 0.23042553191488652, 0.23116169544740794, 0.2318445896877265,
    0.2324797843665767, 0.2330721003134796,
];
const DOUBLE_PMC_SERIES: [f64; 26] = [
    0.09375, 0.13671875, 0.15950520833333334, 0.173828125,
    0.1839599609375, 0.19163970947265624, 0.1977055867513021, 0.20262985229492186,
    0.20670952115740096, 0.21014481782913208, 0.21307689547538758, 0.2156084586703588,
    0.21781609021127224, 0.21975806407863274, 0.22147950078149073, 0.22301587298833986,
    0.22439544807275524, 0.22564102563929528, 0.22677119628295778, 0.22780126849883428,
    0.22874396135262978, 0.22960992907800737, 0.23040816326530442, 0.231146304675716,
    0.23183088749126474, 0.23246753246753243,
];

/// Double round-trip traces (PEC-PEC, PEC-PMC) for a sphere in front of a plane.
pub fn double_roundtrip_u0(y: f64) -> Result<(f64, f64)> {
    if !(y > 1.0) {
        return invalid(format!("need y > 1, got {y}"));
    }
    let y2 = y * y;
    if y >= 2.5 {
        // the closed form cancels by ~y^6 here
        let w = 1.0 / y2;
        let sum = |c: &[f64]| w * w * w * c.iter().rev().fold(0.0, |acc, v| acc * w + v);
        return Ok((sum(&DOUBLE_PEC_SERIES), sum(&DOUBLE_PMC_SERIES)));
    }
    Ok(double_roundtrip_closed(y))
}

fn double_roundtrip_closed(y: f64) -> (f64, f64) {
    let y2 = y * y;
    let y2m1 = (y - 1.0) * (y + 1.0);
    let head = (2.0 * y2 - 1.0) / (4.0 * y2 * y2m1) - 2.0 / (4.0 * y2 - 1.0);
    let w = 1.0 / y2;
    // log(y^6 (y^2 - 1) / (y^2 - 1/4)^4) and log((p + 1)/(p - 1)), p = 4y^3 - 3y
    let lg6 = (-w).ln_1p() - 4.0 * (-0.25 * w).ln_1p();
    let lg3 = 2.0 * (1.0 / (4.0 * y2 * y - 3.0 * y)).atanh();
    let pec = head + 1.0 / (4.0 * y2) + 2.0 * y2 / 3.0 * lg6 + lg3 / (6.0 * y);
    let pmc = head + lg6 + lg3 / (2.0 * y);
    (pec, pmc)
}

/// Double round-trip trace for a mismatch angle delta (sphere-plane).
pub fn tr_m2_u0(delta: f64, y: f64) -> Result<f64> {
    let (pec, pmc) = double_roundtrip_u0(y)?;
    let (s, c) = (2.0 * delta).sin_cos();
    Ok(c * c * pec - s * s * pmc)
}

/// One row of the rational-model coefficient table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalModelCoeffs {
    pub delta: f64,
    pub nu: [f64; 2],
    pub mu: [f64; 2],
    pub max_dev: f64,
}

const TABLE_SRC: &str = include_str!("../data/table1.txt");

fn parse_table(src: &str) -> Result<Vec<RationalModelCoeffs>> {
    let mut rows = Vec::new();
    for line in src.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| crate::Error::Invalid(format!("table row '{line}': {e}")))?;
        if v.len() != 6 {
            return invalid(format!("table row '{line}' needs 6 columns"));
        }
        rows.push(RationalModelCoeffs {
            delta: v[0] * std::f64::consts::PI,
            nu: [v[1], v[2]],
            mu: [v[3], v[4]],
            max_dev: v[5],
        });
    }
    Ok(rows)
}

/// The tabulated rational-model rows for delta = 0, pi/6, pi/3, pi/2.
pub fn rational_table() -> &'static [RationalModelCoeffs] {
    static TABLE: OnceLock<Vec<RationalModelCoeffs>> = OnceLock::new();
    TABLE.get_or_init(|| parse_table(TABLE_SRC).expect("bundled table parses"))
}

/// Look up the table row for delta (to 1e-6).
pub fn rational_row(delta: f64) -> Result<RationalModelCoeffs> {
    rational_table()
        .iter()
        .find(|r| (r.delta - delta).abs() < 1e-6)
        .copied()
        .ok_or_else(|| crate::Error::Invalid(format!("no rational-model row for delta = {delta}")))
}

/// Phi_delta(y) = prod_k (e^{y-1} - 1 + nu_k)/(e^{y-1} - 1 + mu_k).
pub fn rational_model(row: &RationalModelCoeffs, y: f64) -> Result<f64> {
    if !(y > 1.0) {
        return invalid(format!("need y > 1, got {y}"));
    }
    let e = (y - 1.0).exp_m1();
    Ok(row.nu.iter().zip(&row.mu).map(|(n, m)| (e + n) / (e + m)).product())
}
