//! Python bindings: `import pemc`.
//!
//! Invalid input raises `ValueError`; solver failures raise `pemc.SolverError`.

use pemc_core::{analysis, dipole, engine, hightemp, mie, pfa};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(pemc, SolverError, PyRuntimeError);

pub fn to_py(e: pemc_core::Error) -> PyErr {
    match e {
        pemc_core::Error::Invalid(_) => PyValueError::new_err(e.to_string()),
        _ => SolverError::new_err(e.to_string()),
    }
}

type R<T> = PyResult<T>;

fn wrap<T>(r: pemc_core::Result<T>) -> R<T> {
    r.map_err(to_py)
}

/// Two spheres, or a sphere (second body) and a plane (first body).
#[pyclass(name = "Geometry", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyGeometry(pub engine::Geometry);

#[pymethods]
impl PyGeometry {
    #[new]
    pub fn new(r1: f64, r2: f64, gap: f64) -> R<Self> {
        wrap(engine::Geometry::new(r1, r2, gap)).map(Self)
    }

    #[staticmethod]
    pub fn sphere_plane(r: f64, gap: f64) -> R<Self> {
        wrap(engine::Geometry::sphere_plane(r, gap)).map(Self)
    }

    #[staticmethod]
    #[pyo3(signature = (x, u, gap = 1.0))]
    pub fn from_x_u(x: f64, u: f64, gap: f64) -> R<Self> {
        wrap(engine::Geometry::from_x_u(x, u, gap)).map(Self)
    }

    #[staticmethod]
    #[pyo3(signature = (y_minus_one, u, gap = 1.0))]
    pub fn from_y_minus_one(y_minus_one: f64, u: f64, gap: f64) -> R<Self> {
        wrap(engine::Geometry::from_y_minus_one(y_minus_one, u, gap)).map(Self)
    }

    /// infinite for a plane
    #[getter]
    pub fn r1(&self) -> f64 {
        self.0.r1()
    }

    #[getter]
    pub fn r2(&self) -> f64 {
        self.0.r2()
    }

    #[getter]
    pub fn gap(&self) -> f64 {
        self.0.l()
    }

    #[getter]
    pub fn x(&self) -> f64 {
        self.0.x()
    }

    #[getter]
    pub fn u(&self) -> f64 {
        self.0.u()
    }

    #[getter]
    pub fn y(&self) -> f64 {
        self.0.y()
    }

    #[getter]
    pub fn script_l(&self) -> f64 {
        self.0.script_l()
    }

    #[getter]
    pub fn is_plane(&self) -> bool {
        self.0.is_plane()
    }

    fn __repr__(&self) -> String {
        format!("Geometry(r1={}, r2={}, gap={})", self.0.r1(), self.0.r2(), self.0.l())
    }
}

/// Temperature as tau = 2 pi L / lambda_T.
#[pyclass(name = "ThermalState", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyThermalState(pub engine::ThermalState);

#[pymethods]
impl PyThermalState {
    #[new]
    pub fn new(tau: f64) -> R<Self> {
        wrap(engine::ThermalState::new(tau)).map(Self)
    }

    #[staticmethod]
    pub fn zero() -> Self {
        Self(engine::ThermalState::zero())
    }

    #[staticmethod]
    pub fn high_temperature() -> Self {
        Self(engine::ThermalState::high_temperature())
    }

    #[staticmethod]
    pub fn from_gap_over_thermal(r: f64) -> R<Self> {
        wrap(engine::ThermalState::from_gap_over_thermal(r)).map(Self)
    }

    #[getter]
    pub fn tau(&self) -> f64 {
        self.0.tau()
    }

    fn __repr__(&self) -> String {
        format!("ThermalState(tau={})", self.0.tau())
    }
}

/// Duality-rotated perfect conductor; theta = 0 is PEC, pi/2 is PMC.
#[pyclass(name = "PemcMaterial", frozen, from_py_object)]
#[derive(Clone, Copy)]
pub struct PyPemcMaterial(pub mie::PemcMaterial);

#[pymethods]
impl PyPemcMaterial {
    #[new]
    pub fn new(theta: f64) -> R<Self> {
        wrap(mie::PemcMaterial::new(theta)).map(Self)
    }

    #[staticmethod]
    pub fn pec() -> Self {
        Self(mie::PemcMaterial::pec())
    }

    #[staticmethod]
    pub fn pmc() -> Self {
        Self(mie::PemcMaterial::pmc())
    }

    #[getter]
    pub fn theta(&self) -> f64 {
        self.0.theta()
    }

    fn __repr__(&self) -> String {
        format!("PemcMaterial(theta={})", self.0.theta())
    }
}

/// Truncation and quadrature controls; unset keywords keep their defaults.
#[pyclass(name = "Discretization", from_py_object)]
#[derive(Clone, Default)]
pub struct PyDiscretization(pub engine::Discretization);

#[pymethods]
impl PyDiscretization {
    #[new]
    #[pyo3(signature = (*, nodes = None, l_max = None, m_max = None, xi_rel_tol = None, matsubara_tol = None, m_tol = None, log_cutoff = None))]
    pub fn new(
        nodes: Option<usize>,
        l_max: Option<usize>,
        m_max: Option<usize>,
        xi_rel_tol: Option<f64>,
        matsubara_tol: Option<f64>,
        m_tol: Option<f64>,
        log_cutoff: Option<f64>,
    ) -> Self {
        let mut d = engine::Discretization {
            nodes,
            l_max,
            m_max,
            ..Default::default()
        };
        if let Some(v) = xi_rel_tol {
            d.xi_rel_tol = v;
        }
        if let Some(v) = matsubara_tol {
            d.matsubara_tol = v;
        }
        if let Some(v) = m_tol {
            d.m_tol = v;
        }
        if let Some(v) = log_cutoff {
            d.log_cutoff = v;
        }
        Self(d)
    }

    #[getter]
    fn nodes(&self) -> Option<usize> {
        self.0.nodes
    }

    #[setter]
    fn set_nodes(&mut self, v: Option<usize>) {
        self.0.nodes = v;
    }

    #[getter]
    fn l_max(&self) -> Option<usize> {
        self.0.l_max
    }

    #[setter]
    fn set_l_max(&mut self, v: Option<usize>) {
        self.0.l_max = v;
    }

    #[getter]
    fn m_max(&self) -> Option<usize> {
        self.0.m_max
    }

    #[setter]
    fn set_m_max(&mut self, v: Option<usize>) {
        self.0.m_max = v;
    }

    #[getter]
    fn xi_rel_tol(&self) -> f64 {
        self.0.xi_rel_tol
    }

    #[setter]
    fn set_xi_rel_tol(&mut self, v: f64) {
        self.0.xi_rel_tol = v;
    }

    #[getter]
    fn matsubara_tol(&self) -> f64 {
        self.0.matsubara_tol
    }

    #[setter]
    fn set_matsubara_tol(&mut self, v: f64) {
        self.0.matsubara_tol = v;
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Free energy in hbar c / L and k_B T; either may be None in a limit.
#[pyclass(name = "EnergyResult", frozen, get_all)]
pub struct EnergyResult {
    pub free_energy: Option<f64>,
    pub free_energy_kt: Option<f64>,
    /// Matsubara terms (T > 0)
    pub per_n: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Force in hbar c / L^2 and k_B T / L; negative values attract.
#[pyclass(name = "ForceResult", frozen, get_all)]
pub struct ForceResult {
    pub force: Option<f64>,
    pub force_kt: Option<f64>,
    pub free_energy: Option<f64>,
    pub free_energy_kt: Option<f64>,
}

fn disc_of(d: Option<PyDiscretization>) -> engine::Discretization {
    d.map(|d| d.0).unwrap_or_default()
}

#[pyfunction]
#[pyo3(signature = (geometry, mat1, mat2, thermal, disc = None))]
pub fn free_energy(
    py: Python<'_>,
    geometry: PyGeometry,
    mat1: PyPemcMaterial,
    mat2: PyPemcMaterial,
    thermal: PyThermalState,
    disc: Option<PyDiscretization>,
) -> R<EnergyResult> {
    let d = disc_of(disc);
    let r = wrap(py.detach(|| engine::free_energy(&geometry.0, mat1.0, mat2.0, thermal.0, &d)))?;
    Ok(EnergyResult {
        free_energy: r.free_energy,
        free_energy_kt: r.free_energy_kt,
        per_n: r.per_n,
        warnings: r.convergence.warnings,
    })
}

#[pyfunction]
#[pyo3(signature = (geometry, mat1, mat2, thermal, disc = None))]
pub fn force(
    py: Python<'_>,
    geometry: PyGeometry,
    mat1: PyPemcMaterial,
    mat2: PyPemcMaterial,
    thermal: PyThermalState,
    disc: Option<PyDiscretization>,
) -> R<ForceResult> {
    let d = disc_of(disc);
    let r = wrap(py.detach(|| engine::force(&geometry.0, mat1.0, mat2.0, thermal.0, &d)))?;
    Ok(ForceResult {
        force: r.force,
        force_kt: r.force_kt,
        free_energy: r.energy.free_energy,
        free_energy_kt: r.energy.free_energy_kt,
    })
}

/// Angle difference where the force vanishes, or None.
#[pyfunction]
#[pyo3(signature = (x, u, thermal, disc = None))]
pub fn critical_angle(py: Python<'_>, x: f64, u: f64, thermal: PyThermalState, disc: Option<PyDiscretization>) -> R<Option<f64>> {
    let d = disc_of(disc);
    wrap(py.detach(|| analysis::critical_angle(x, u, thermal.0, &d)))
}

/// Force zeros in x at fixed L / lambda_T, as (x, L / lambda_T, stable) tuples.
#[pyfunction]
#[pyo3(signature = (delta, u, gap_over_thermal, x_grid, disc = None))]
pub fn equilibrium(
    py: Python<'_>,
    delta: f64,
    u: f64,
    gap_over_thermal: f64,
    x_grid: Vec<f64>,
    disc: Option<PyDiscretization>,
) -> R<Vec<(f64, f64, bool)>> {
    let d = disc_of(disc);
    let scan = wrap(analysis::ThermalScan::row(gap_over_thermal))?;
    let v = wrap(py.detach(|| analysis::equilibrium_crossings(delta, u, scan, &x_grid, &d)))?;
    Ok(v.into_iter().map(|e| (e.x, e.gap_over_thermal, e.stable)).collect())
}

/// Integral of the force over delta in [0, pi/2]: (integral, error, y^3-scaled or None).
#[pyfunction]
#[pyo3(signature = (geometry, thermal, disc = None, tol = 1e-6))]
pub fn sumrule(py: Python<'_>, geometry: PyGeometry, thermal: PyThermalState, disc: Option<PyDiscretization>, tol: f64) -> R<(f64, f64, Option<f64>)> {
    let d = disc_of(disc);
    let s = wrap(py.detach(|| analysis::sumrule_integral(&geometry.0, thermal.0, &d, tol)))?;
    Ok((s.quadrature.integral, s.quadrature.error, s.y3_scaled))
}

#[pyfunction]
pub fn pfa_energy_t0(x: f64, delta: f64) -> R<f64> {
    wrap(pfa::pfa_energy_t0(x, delta))
}

/// (hbar c / L, k_B T) units.
#[pyfunction]
#[pyo3(signature = (x, tau, delta, u = 0.0))]
pub fn pfa_free_energy(x: f64, tau: f64, delta: f64, u: f64) -> R<(f64, f64)> {
    let f = wrap(pfa::PfaInputs::new(x, tau, delta, u).and_then(|p| pfa::pfa_free_energy(&p)))?;
    Ok((f.hbar_c, f.k_bt))
}

#[pyfunction]
pub fn pfa_low_t_correction(x: f64, tau: f64, delta: f64) -> R<f64> {
    wrap(pfa::PfaInputs::new(x, tau, delta, 0.0).and_then(|p| pfa::pfa_low_t_correction(&p)).map(|e| e.value))
}

#[pyfunction]
pub fn pfa_high_t(x: f64, delta: f64) -> R<f64> {
    wrap(pfa::pfa_high_t(x, delta))
}

#[pyfunction]
pub fn pfa_critical_angle(tau: f64) -> R<f64> {
    wrap(pfa::pfa_critical_angle(tau))
}

#[pyfunction]
pub fn pfa_geometric_correction(x: f64, u: f64, delta: f64) -> R<f64> {
    wrap(pfa::pfa_geometric_correction(x, u, delta))
}

#[pyfunction]
pub fn dipole_dipole_free_energy(r1: f64, r2: f64, script_l: f64, tau_tilde: f64, delta: f64) -> R<f64> {
    wrap(dipole::dipole_dipole_free_energy(r1, r2, script_l, tau_tilde, delta))
}

#[pyfunction]
pub fn dipole_dipole_force(r1: f64, r2: f64, script_l: f64, tau_tilde: f64, delta: f64) -> R<f64> {
    wrap(dipole::dipole_dipole_force(r1, r2, script_l, tau_tilde, delta))
}

#[pyfunction]
pub fn dipole_plane_free_energy(r: f64, script_l: f64, tau_tilde: f64, delta: f64) -> R<f64> {
    wrap(dipole::dipole_plane_free_energy(r, script_l, tau_tilde, delta))
}

#[pyfunction]
pub fn dipole_plane_force(r: f64, script_l: f64, tau_tilde: f64, delta: f64) -> R<f64> {
    wrap(dipole::dipole_plane_force(r, script_l, tau_tilde, delta))
}

#[pyfunction]
pub fn dipole_dipole_critical_angle(tau_tilde: f64) -> R<f64> {
    wrap(dipole::dipole_dipole_critical_angle(tau_tilde))
}

#[pyfunction]
pub fn tr_m_pec_pec(y: f64, u: f64) -> R<f64> {
    wrap(hightemp::tr_m_pec_pec(y, u))
}

#[pyfunction]
pub fn tr_m_pec_pmc(y: f64, u: f64) -> R<f64> {
    wrap(hightemp::tr_m_pec_pmc(y, u))
}

/// Single round-trip high-temperature free energy in k_B T.
#[pyfunction]
pub fn single_roundtrip_high_t(delta: f64, y: f64, u: f64) -> R<f64> {
    wrap(hightemp::single_roundtrip_high_t(delta, y, u))
}

/// Rational model of the free-energy ratio for a tabulated delta.
#[pyfunction]
pub fn rational_model(delta: f64, y: f64) -> R<f64> {
    wrap(hightemp::rational_row(delta).and_then(|r| hightemp::rational_model(&r, y)))
}

#[pymodule]
fn pemc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SolverError", m.py().get_type::<SolverError>())?;
    m.add_class::<PyGeometry>()?;
    m.add_class::<PyThermalState>()?;
    m.add_class::<PyPemcMaterial>()?;
    m.add_class::<PyDiscretization>()?;
    m.add_class::<EnergyResult>()?;
    m.add_class::<ForceResult>()?;
    m.add_function(wrap_pyfunction!(free_energy, m)?)?;
    m.add_function(wrap_pyfunction!(force, m)?)?;
    m.add_function(wrap_pyfunction!(critical_angle, m)?)?;
    m.add_function(wrap_pyfunction!(equilibrium, m)?)?;
    m.add_function(wrap_pyfunction!(sumrule, m)?)?;
    m.add_function(wrap_pyfunction!(pfa_energy_t0, m)?)?;
    m.add_function(wrap_pyfunction!(pfa_free_energy, m)?)?;
    m.add_function(wrap_pyfunction!(pfa_low_t_correction, m)?)?;
    m.add_function(wrap_pyfunction!(pfa_high_t, m)?)?;
    m.add_function(wrap_pyfunction!(pfa_critical_angle, m)?)?;
    m.add_function(wrap_pyfunction!(pfa_geometric_correction, m)?)?;
    m.add_function(wrap_pyfunction!(dipole_dipole_free_energy, m)?)?;
    m.add_function(wrap_pyfunction!(dipole_dipole_force, m)?)?;
    m.add_function(wrap_pyfunction!(dipole_plane_free_energy, m)?)?;
    m.add_function(wrap_pyfunction!(dipole_plane_force, m)?)?;
    m.add_function(wrap_pyfunction!(dipole_dipole_critical_angle, m)?)?;
    m.add_function(wrap_pyfunction!(tr_m_pec_pec, m)?)?;
    m.add_function(wrap_pyfunction!(tr_m_pec_pmc, m)?)?;
    m.add_function(wrap_pyfunction!(single_roundtrip_high_t, m)?)?;
    m.add_function(wrap_pyfunction!(rational_model, m)?)?;
    Ok(())
}
