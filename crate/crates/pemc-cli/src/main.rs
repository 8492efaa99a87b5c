//! `pemc`: Casimir energies, forces and phase maps for PEMC spheres and planes.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver failure.
//! Parallel work uses rayon; set `RAYON_NUM_THREADS` to bound it.

mod config;
mod figures;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{bad, disc_json, geometry_json, thermal_state, ConfigError, GeometryArgs, MaterialArgs, SolverArgs, TempArgs, Temperature, HBAR_C, K_B};
use output::{Cell, Dataset, Format};
use pemc_core::analysis::{
    critical_angle_in, equilibrium_crossings, log_grid, sumrule_quadrature, sumrule_integral, DipoleForce, PfaForce, ThermalScan,
};
use pemc_core::engine::{force, free_energy, Discretization, Geometry, ThermalState};
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "pemc", version, about = "Casimir interaction between PEMC spheres and planes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    /// Output file; CSV output also writes <out>.json with the full record
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Model {
    Engine,
    Pfa,
    Dipole,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Free energy of two bodies
    Energy {
        #[command(flatten)]
        geom: GeometryArgs,
        #[command(flatten)]
        mat: MaterialArgs,
        #[command(flatten)]
        temp: TempArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Force between two bodies; negative values attract
    Force {
        #[command(flatten)]
        geom: GeometryArgs,
        #[command(flatten)]
        mat: MaterialArgs,
        #[command(flatten)]
        temp: TempArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Duality-angle difference at which the force vanishes
    CriticalAngle {
        #[command(flatten)]
        geom: GeometryArgs,
        #[command(flatten)]
        temp: TempArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Distances at which the force vanishes, scanning x = L / R_eff
    Equilibrium {
        /// Asymmetry in [0, 1/4]; alternatively give --r1 and --r2 in metres
        #[arg(long)]
        u: Option<f64>,
        /// Radius of the first sphere in metres, or "plane"
        #[arg(long)]
        r1: Option<String>,
        /// Radius of the second sphere in metres
        #[arg(long)]
        r2: Option<f64>,
        #[command(flatten)]
        mat: MaterialArgs,
        #[command(flatten)]
        temp: TempArgs,
        #[arg(long, default_value_t = 0.05)]
        x_min: f64,
        #[arg(long, default_value_t = 10.0)]
        x_max: f64,
        #[arg(long, default_value_t = 8)]
        x_points: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Integral of the force over the duality angle of the second body
    Sumrule {
        #[command(flatten)]
        geom: GeometryArgs,
        #[command(flatten)]
        temp: TempArgs,
        #[arg(long, value_enum, default_value_t = Model::Engine)]
        model: Model,
        /// Allowed difference of the 32- and 64-point rules relative to the peak force
        #[arg(long, default_value_t = 1e-6)]
        quad_tol: f64,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Data series of a figure (2 to 10)
    Figure {
        id: u32,
        /// Grid points along the scanned axis
        #[arg(long, default_value_t = 12)]
        points: usize,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

enum Failure {
    Input(String),
    Solver(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Input(e.0)
    }
}

impl From<pemc_core::Error> for Failure {
    fn from(e: pemc_core::Error) -> Self {
        match e {
            pemc_core::Error::Invalid(_) => Failure::Input(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(format!("i/o: {e}"))
    }
}

fn base_meta(d: &mut Dataset, command: &str, disc: &Discretization) {
    d.meta("program", json!(format!("pemc {}", env!("CARGO_PKG_VERSION"))));
    d.meta("argv", json!(std::env::args().skip(1).collect::<Vec<_>>().join(" ")));
    d.meta("command", json!(command));
    d.meta("discretization", disc_json(disc));
}

fn temperature_meta(d: &mut Dataset, t: Temperature, thermal: ThermalState) {
    d.meta("temperature", json!(format!("{t:?}")));
    d.meta("tau", Value::from(if thermal.tau().is_finite() { json!(thermal.tau()) } else { json!("inf") }));
}

fn angle_cells(theta: f64) -> [Cell; 2] {
    [theta.into(), (theta / (PI / 4.0)).into()]
}

fn energy_cmd(geom: &GeometryArgs, mat: &MaterialArgs, temp: &TempArgs, solver: &SolverArgs) -> Result<Dataset, Failure> {
    let g = geom.resolve()?;
    let (m1, m2) = mat.resolve()?;
    let t = Temperature::parse(&temp.temp)?;
    let thermal = thermal_state(t, g.gap_m)?;
    let disc = solver.discretization()?;
    let rep = free_energy(&g.geom, m1, m2, thermal, &disc)?;
    let mut d = Dataset::new(&["x", "u", "theta1", "theta2", "tau", "free_energy_hbar_c_over_l", "free_energy_kt", "free_energy_joule"]);
    base_meta(&mut d, "energy", &disc);
    d.meta("geometry", geometry_json(&g.geom));
    temperature_meta(&mut d, t, thermal);
    let joule = g.gap_m.and_then(|l| match (rep.free_energy, rep.free_energy_kt, t) {
        (Some(f), _, _) => Some(f * HBAR_C / l),
        (None, Some(f), Temperature::Kelvin(k)) => Some(f * K_B * k),
        _ => None,
    });
    d.push(vec![
        g.geom.x().into(),
        g.geom.u().into(),
        m1.theta().into(),
        m2.theta().into(),
        thermal.tau().into(),
        rep.free_energy.into(),
        rep.free_energy_kt.into(),
        joule.into(),
    ]);
    d.extra = json!({ "per_n": rep.per_n, "convergence": format!("{:?}", rep.convergence) });
    Ok(d)
}

fn force_cmd(geom: &GeometryArgs, mat: &MaterialArgs, temp: &TempArgs, solver: &SolverArgs) -> Result<Dataset, Failure> {
    let g = geom.resolve()?;
    let (m1, m2) = mat.resolve()?;
    let t = Temperature::parse(&temp.temp)?;
    let thermal = thermal_state(t, g.gap_m)?;
    let disc = solver.discretization()?;
    let rep = force(&g.geom, m1, m2, thermal, &disc)?;
    let mut d = Dataset::new(&["x", "u", "theta1", "theta2", "tau", "force_hbar_c_over_l2", "force_kt_over_l", "force_newton"]);
    base_meta(&mut d, "force", &disc);
    d.meta("geometry", geometry_json(&g.geom));
    temperature_meta(&mut d, t, thermal);
    let newton = g.gap_m.and_then(|l| match (rep.force, rep.force_kt, t) {
        (Some(f), _, _) => Some(f * HBAR_C / (l * l)),
        (None, Some(f), Temperature::Kelvin(k)) => Some(f * K_B * k / l),
        _ => None,
    });
    d.push(vec![
        g.geom.x().into(),
        g.geom.u().into(),
        m1.theta().into(),
        m2.theta().into(),
        thermal.tau().into(),
        rep.force.into(),
        rep.force_kt.into(),
        newton.into(),
    ]);
    d.extra = json!({ "convergence": format!("{:?}", rep.energy.convergence) });
    Ok(d)
}

fn critical_cmd(geom: &GeometryArgs, temp: &TempArgs, solver: &SolverArgs) -> Result<Dataset, Failure> {
    let g = geom.resolve()?;
    let t = Temperature::parse(&temp.temp)?;
    let thermal = thermal_state(t, g.gap_m)?;
    let disc = solver.discretization()?;
    let delta = critical_angle_in(&g.geom, thermal, &disc)?;
    let mut d = Dataset::new(&["x", "u", "tau", "delta_crit", "delta_crit_quarter_pi"]);
    base_meta(&mut d, "critical-angle", &disc);
    d.meta("geometry", geometry_json(&g.geom));
    temperature_meta(&mut d, t, thermal);
    let [a, b] = delta.map_or([Cell::Empty, Cell::Empty], angle_cells);
    d.push(vec![g.geom.x().into(), g.geom.u().into(), thermal.tau().into(), a, b]);
    Ok(d)
}

/// (u, R_eff in metres when known)
fn equilibrium_body(u: Option<f64>, r1: &Option<String>, r2: Option<f64>) -> Result<(f64, Option<f64>), ConfigError> {
    match (u, r1, r2) {
        (Some(u), None, None) => Ok((u, None)),
        (None, Some(r1), Some(r2)) => {
            // any gap fixes u and R_eff
            let g = if r1.eq_ignore_ascii_case("plane") {
                Geometry::sphere_plane(r2, r2)
            } else {
                let r1: f64 = r1.parse().map_err(|_| ConfigError(format!("--r1 must be a length or 'plane', got '{r1}'")))?;
                Geometry::new(r1, r2, r2)
            }
            .map_err(|e| ConfigError(e.to_string()))?;
            Ok((g.u(), Some(g.r_eff())))
        }
        _ => bad("give either --u or both --r1 and --r2"),
    }
}

#[allow(clippy::too_many_arguments)]
fn equilibrium_cmd(
    u: Option<f64>,
    r1: &Option<String>,
    r2: Option<f64>,
    mat: &MaterialArgs,
    temp: &TempArgs,
    x_range: (f64, f64, usize),
    solver: &SolverArgs,
) -> Result<Dataset, Failure> {
    let (u, r_eff) = equilibrium_body(u, r1, r2)?;
    let delta = mat.delta()?;
    let t = Temperature::parse(&temp.temp)?;
    let scan = match t {
        Temperature::Zero => ThermalScan::row(0.0)?,
        Temperature::Infinite => ThermalScan::row(f64::INFINITY)?,
        Temperature::Tau(tau) => ThermalScan::row(tau / (2.0 * PI))?,
        Temperature::Kelvin(k) => match r_eff {
            Some(r) if k > 0.0 => ThermalScan::FixedThermalLength(HBAR_C / (K_B * k) / r),
            Some(_) => ThermalScan::row(0.0)?,
            None => return Err(Failure::Input("a temperature in kelvin needs --r1 and --r2".into())),
        },
    };
    let (a, b, n) = x_range;
    if !(a > 0.0 && b > a && n >= 2) {
        return Err(Failure::Input("need 0 < --x-min < --x-max and --x-points >= 2".into()));
    }
    let disc = solver.discretization()?;
    let all = equilibrium_crossings(delta, u, scan, &log_grid(a, b, n), &disc)?;
    let mut d = Dataset::new(&["u", "delta", "x_eq", "gap_over_thermal", "stable", "gap_metre"]);
    base_meta(&mut d, "equilibrium", &disc);
    d.meta("temperature", json!(format!("{t:?}")));
    d.meta("scan", json!(format!("{scan:?}")));
    for e in &all {
        d.push(vec![u.into(), delta.into(), e.x.into(), e.gap_over_thermal.into(), e.stable.into(), r_eff.map(|r| r * e.x).into()]);
    }
    Ok(d)
}

fn sumrule_cmd(geom: &GeometryArgs, temp: &TempArgs, model: Model, quad_tol: f64, solver: &SolverArgs) -> Result<Dataset, Failure> {
    if !(quad_tol > 0.0) {
        return Err(Failure::Input("--quad-tol must be positive".into()));
    }
    let g = geom.resolve()?;
    let t = Temperature::parse(&temp.temp)?;
    let thermal = thermal_state(t, g.gap_m)?;
    let disc = solver.discretization()?;
    let mut d = Dataset::new(&["x", "u", "tau", "model", "integral", "quadrature_error", "peak_force", "y3_scaled"]);
    base_meta(&mut d, "sumrule", &disc);
    d.meta("geometry", geometry_json(&g.geom));
    temperature_meta(&mut d, t, thermal);
    let geo = g.geom;
    let (q, y3, unit) = match model {
        Model::Engine => {
            let s = sumrule_integral(&geo, thermal, &disc, quad_tol)?;
            (s.quadrature, s.y3_scaled, "hbar c / L^2 (k_B T / L at infinite temperature)")
        }
        Model::Pfa => (sumrule_quadrature(&PfaForce { x: geo.x(), thermal }, quad_tol)?, None, "hbar c / L^2 (k_B T / L at infinite temperature)"),
        Model::Dipole => {
            let high = thermal.is_high_temperature();
            // only the zero frequency survives; e^{-tau_tilde} corrections are below rounding here
            let tau_tilde = if high { 1e4 } else { thermal.tau_tilde(&geo) };
            let m = DipoleForce {
                r1: (!geo.is_plane()).then(|| geo.r1()),
                r2: geo.r2(),
                script_l: geo.script_l(),
                tau_tilde,
            };
            let mut q = sumrule_quadrature(&m, quad_tol)?;
            if high {
                let s = 2.0 * PI / tau_tilde;
                q.integral *= s;
                q.error *= s;
                q.peak *= s;
                (q, None, "k_B T / script_L in the length unit of the geometry")
            } else {
                (q, None, "hbar c / script_L^2 in the length unit of the geometry")
            }
        }
    };
    d.meta("units", json!(unit));
    let name = format!("{model:?}").to_lowercase();
    d.push(vec![geo.x().into(), geo.u().into(), thermal.tau().into(), name.into(), q.integral.into(), q.error.into(), q.peak.into(), y3.into()]);
    Ok(d)
}

fn figure_cmd(id: u32, points: usize, solver: &SolverArgs) -> Result<Dataset, Failure> {
    if !figures::IDS.contains(&id) {
        return Err(Failure::Input(format!("no figure {id}; choose 2 to 10")));
    }
    let disc = solver.discretization()?;
    let mut d = figures::figure(id, points, &disc)?;
    base_meta(&mut d, "figure", &disc);
    Ok(d)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (data, out) = match &cli.command {
        Command::Energy { geom, mat, temp, solver, out } => (energy_cmd(geom, mat, temp, solver)?, out),
        Command::Force { geom, mat, temp, solver, out } => (force_cmd(geom, mat, temp, solver)?, out),
        Command::CriticalAngle { geom, temp, solver, out } => (critical_cmd(geom, temp, solver)?, out),
        Command::Equilibrium { u, r1, r2, mat, temp, x_min, x_max, x_points, solver, out } => {
            (equilibrium_cmd(*u, r1, *r2, mat, temp, (*x_min, *x_max, *x_points), solver)?, out)
        }
        Command::Sumrule { geom, temp, model, quad_tol, solver, out } => (sumrule_cmd(geom, temp, *model, *quad_tol, solver)?, out),
        Command::Figure { id, points, solver, out } => (figure_cmd(*id, *points, solver)?, out),
    };
    for p in data.emit(out.out.as_deref(), out.format)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
