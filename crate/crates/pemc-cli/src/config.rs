//! Resolution of command-line inputs into a validated run configuration.

use clap::Args;
use pemc_core::engine::{Discretization, Geometry, ThermalState};
use pemc_core::mie::PemcMaterial;
use serde_json::{json, Value};
use std::f64::consts::PI;

/// hbar c in J m.
pub const HBAR_C: f64 = 3.1615e-26;
/// Boltzmann constant in J/K.
pub const K_B: f64 = 1.380649e-23;

/// Input error; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Args, Debug, Clone, Default)]
pub struct GeometryArgs {
    /// Radius of the first sphere in metres, or "plane"
    #[arg(long)]
    pub r1: Option<String>,
    /// Radius of the second sphere in metres
    #[arg(long)]
    pub r2: Option<f64>,
    /// Surface-to-surface distance in metres
    #[arg(long)]
    pub gap: Option<f64>,
    /// Aspect ratio L / R_eff (dimensionless mode)
    #[arg(long)]
    pub x: Option<f64>,
    /// Asymmetry R1 R2 / (R1 + R2)^2 in [0, 1/4] (dimensionless mode)
    #[arg(long)]
    pub u: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct MaterialArgs {
    /// Angle of the first body
    #[arg(long, allow_hyphen_values = true)]
    pub theta1: Option<f64>,
    /// Angle of the second body
    #[arg(long, allow_hyphen_values = true, conflicts_with = "delta")]
    pub theta2: Option<f64>,
    /// Angle difference; the first body is then a PEC
    #[arg(long, allow_hyphen_values = true, conflicts_with = "theta1")]
    pub delta: Option<f64>,
    /// Read angles in radians instead of units of pi/4
    #[arg(long)]
    pub radians: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TempArgs {
    /// Temperature: "zero", "inf", kelvin as "300K", or "tau=<2 pi L / lambda_T>"
    #[arg(long, default_value = "zero")]
    pub temp: String,
}

#[derive(Args, Debug, Clone, Default)]
pub struct SolverArgs {
    /// Radial quadrature nodes
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Multipole cutoff of the amplitude tables
    #[arg(long)]
    pub lmax: Option<usize>,
    /// Largest azimuthal order
    #[arg(long)]
    pub mmax: Option<usize>,
    /// Relative tolerance of the frequency integral and Matsubara sum
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Zero,
    Infinite,
    Kelvin(f64),
    Tau(f64),
}

impl Temperature {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let t = s.trim();
        let num = |v: &str| -> Result<f64, ConfigError> {
            v.trim().parse::<f64>().map_err(|_| ConfigError(format!("cannot read temperature '{s}'")))
        };
        let out = match t.to_ascii_lowercase().as_str() {
            "zero" | "0" => Self::Zero,
            "inf" | "infinite" | "infinity" => Self::Infinite,
            l if l.starts_with("tau=") => Self::Tau(num(&l[4..])?),
            l if l.ends_with('k') => Self::Kelvin(num(&l[..l.len() - 1])?),
            _ => return bad(format!("cannot read temperature '{s}'; use zero, inf, 300K or tau=1.5")),
        };
        match out {
            Self::Kelvin(v) | Self::Tau(v) if !(v >= 0.0 && v.is_finite()) => bad(format!("temperature must be finite and >= 0, got '{s}'")),
            _ => Ok(out),
        }
    }
}

/// Geometry in either SI or dimensionless form.
#[derive(Debug, Clone)]
pub struct ResolvedGeometry {
    pub geom: Geometry,
    /// gap in metres for SI input
    pub gap_m: Option<f64>,
}

impl GeometryArgs {
    pub fn resolve(&self) -> Result<ResolvedGeometry, ConfigError> {
        let si = self.r1.is_some() || self.r2.is_some() || self.gap.is_some();
        let dimless = self.x.is_some() || self.u.is_some();
        match (si, dimless) {
            (true, true) => bad("give either --r1/--r2/--gap or --x/--u, not both"),
            (false, false) => bad("no geometry: give --r1/--r2/--gap or --x/--u"),
            (true, false) => {
                let (Some(r1), Some(r2), Some(gap)) = (&self.r1, self.r2, self.gap) else {
                    return bad("SI mode needs --r1, --r2 and --gap");
                };
                let geom = if r1.eq_ignore_ascii_case("plane") {
                    Geometry::sphere_plane(r2, gap)
                } else {
                    let r1: f64 = r1.parse().map_err(|_| ConfigError(format!("--r1 must be a length or 'plane', got '{r1}'")))?;
                    Geometry::new(r1, r2, gap)
                }
                .map_err(|e| ConfigError(e.to_string()))?;
                Ok(ResolvedGeometry { geom, gap_m: Some(gap) })
            }
            (false, true) => {
                let (Some(x), Some(u)) = (self.x, self.u) else {
                    return bad("dimensionless mode needs --x and --u");
                };
                let geom = Geometry::from_x_u(x, u, 1.0).map_err(|e| ConfigError(e.to_string()))?;
                Ok(ResolvedGeometry { geom, gap_m: None })
            }
        }
    }
}

impl MaterialArgs {
    fn to_rad(&self, v: f64) -> f64 {
        if self.radians {
            v
        } else {
            v * PI / 4.0
        }
    }

    /// (theta1, theta2) in radians.
    pub fn resolve(&self) -> Result<(PemcMaterial, PemcMaterial), ConfigError> {
        let (t1, t2) = match self.delta {
            Some(d) => (0.0, self.to_rad(d)),
            None => (self.to_rad(self.theta1.unwrap_or(0.0)), self.to_rad(self.theta2.unwrap_or(0.0))),
        };
        let m = |t: f64| PemcMaterial::new(t).map_err(|e| ConfigError(e.to_string()));
        Ok((m(t1)?, m(t2)?))
    }

    /// Angle difference only, for commands that take delta.
    pub fn delta(&self) -> Result<f64, ConfigError> {
        let (a, b) = self.resolve()?;
        Ok((b.theta() - a.theta()).abs())
    }
}

/// tau = 2 pi L k_B T / (hbar c) for a gap in metres.
pub fn tau_from_kelvin(gap_m: f64, kelvin: f64) -> f64 {
    2.0 * PI * gap_m * K_B * kelvin / HBAR_C
}

pub fn thermal_state(t: Temperature, gap_m: Option<f64>) -> Result<ThermalState, ConfigError> {
    let s = match t {
        Temperature::Zero => ThermalState::zero(),
        Temperature::Infinite => ThermalState::high_temperature(),
        Temperature::Tau(v) => ThermalState::new(v).map_err(|e| ConfigError(e.to_string()))?,
        Temperature::Kelvin(k) => match gap_m {
            Some(g) => ThermalState::new(tau_from_kelvin(g, k)).map_err(|e| ConfigError(e.to_string()))?,
            None => return bad("a temperature in kelvin needs SI lengths (--r1/--r2/--gap)"),
        },
    };
    Ok(s)
}

impl SolverArgs {
    pub fn discretization(&self) -> Result<Discretization, ConfigError> {
        let mut d = Discretization::default();
        if let Some(n) = self.nodes {
            if n < 8 {
                return bad("--nodes must be at least 8");
            }
            d.nodes = Some(n);
        }
        if let Some(l) = self.lmax {
            if l < 1 {
                return bad("--lmax must be positive");
            }
            d.l_max = Some(l);
        }
        d.m_max = self.mmax;
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return bad("--tol must lie in (0, 1)");
            }
            d.xi_rel_tol = t;
            d.matsubara_tol = t;
        }
        Ok(d)
    }
}

pub fn disc_json(d: &Discretization) -> Value {
    json!({
        "node_a": d.node_a,
        "node_b": d.node_b,
        "nodes": d.nodes,
        "k_scale": d.k_scale,
        "log_cutoff": d.log_cutoff,
        "m_max": d.m_max,
        "l_max": d.l_max,
        "m_tol": d.m_tol,
        "matsubara_tol": d.matsubara_tol,
        "max_matsubara": d.max_matsubara,
        "xi_rel_tol": d.xi_rel_tol,
        "xi_max_panels": d.xi_max_panels,
        "force_step": d.force_step,
    })
}

pub fn geometry_json(g: &Geometry) -> Value {
    json!({
        "r1": if g.is_plane() { Value::from("plane") } else { Value::from(g.r1()) },
        "r2": g.r2(),
        "gap": g.l(),
        "x": g.x(),
        "u": g.u(),
        "y": g.y(),
    })
}
