"""Smoke test for the pemc extension module.

Build and install it first, e.g. `maturin develop -m crates/pemc-py/Cargo.toml`,
or copy target/release/libpemc.so to a directory on PYTHONPATH as pemc.so.
"""

import math

import pemc


def main():
    geom = pemc.Geometry.from_x_u(1.0, 0.25)
    assert abs(geom.u - 0.25) < 1e-14
    pec, dual = pemc.PemcMaterial.pec(), pemc.PemcMaterial(math.pi / 4)

    hot = pemc.ThermalState.high_temperature()
    e = pemc.free_energy(geom, pec, dual, hot)
    f = pemc.force(geom, pec, dual, hot, pemc.Discretization(m_tol=1e-10))
    print("free energy / kT:", e.free_energy_kt, " force / (kT/L):", f.force_kt)
    assert e.free_energy is None and e.free_energy_kt < 0

    delta = pemc.critical_angle(2.0, 0.25, hot)
    print("critical angle at x = 2:", delta / (math.pi / 4), "pi/4")
    assert 0.92 < delta / (math.pi / 4) < 1.071

    crossings = pemc.equilibrium(math.pi / 4, 0.25, math.inf, [0.1, 0.3, 1.0, 3.0])
    print("equilibria:", crossings)
    assert any(stable for _, _, stable in crossings)

    integral, err, scaled = pemc.sumrule(pemc.Geometry.from_y_minus_one(2.0, 0.25), hot)
    print("sum rule:", integral, "+-", err, " y^3 scaled:", scaled)
    assert scaled < 0

    assert abs(pemc.pfa_critical_angle(0.0) / (math.pi / 4) - 0.961) < 1e-3
    assert abs(pemc.dipole_dipole_critical_angle(math.inf) / (math.pi / 4) - 1.070) < 1e-3
    assert pemc.tr_m_pec_pec(2.0, 0.0) > 0

    try:
        pemc.Geometry(1.0, -1.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative radius accepted")
    try:
        pemc.free_energy(geom, pec, dual, pemc.ThermalState(1.0), pemc.Discretization(l_max=2))
    except pemc.SolverError:
        pass
    else:
        raise AssertionError("tiny multipole cutoff accepted")
    print("ok")


if __name__ == "__main__":
    main()
