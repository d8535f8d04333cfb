import numpy as np
import pytest
from scipy.integrate import quad

from solitonforge import (DomainError, GridField, PoleOnRayError,
                          phase_point_from_kappas)
from solitonforge.backlund import add_solitons
from solitonforge.conserved import (EnergyReport, energy_Es, energy_report,
                                    hamiltonian, trace_residual, xi_s)

from conftest import quad_mass, soliton_profile


def test_hamiltonian_vacuum(grid):
    zero = GridField.zero(grid)
    assert all(hamiltonian(zero, n) == 0.0 for n in range(5))


def test_hamiltonian_q0(q0):
    # closed sech integrals: H0 = 4, H2 = -16/3, H4 = 64/5; odd ones vanish
    assert hamiltonian(q0, 0) == pytest.approx(4.0, abs=1e-8)
    assert hamiltonian(q0, 1) == pytest.approx(0.0, abs=1e-10)
    assert hamiltonian(q0, 2) == pytest.approx(-16.0 / 3.0, abs=1e-8)
    assert hamiltonian(q0, 3) == pytest.approx(0.0, abs=1e-10)
    assert hamiltonian(q0, 4) == pytest.approx(64.0 / 5.0, abs=1e-7)


def test_hamiltonian_bad_index(q0):
    with pytest.raises(DomainError):
        hamiltonian(q0, 5)


@pytest.mark.parametrize("z", [1j, 2j, 0.5 + 1j])
def test_restriction_law(grid, z):
    pt = phase_point_from_kappas([z], [0.3 + 0.2j])
    q = add_solitons(GridField.zero(grid), pt)
    for n in range(5):
        pred = 2.0 / (n + 1) * np.imag((2 * z) ** (n + 1))
        assert hamiltonian(q, n) == pytest.approx(pred, abs=1e-6)


def test_additivity_of_mass(grid):
    u = GridField(grid, 0.1 * np.exp(-grid.x ** 2 / 5) + 0j)
    pt = phase_point_from_kappas([0.7j, 0.2 + 1.1j], [0.0, 0.5])
    v = add_solitons(u, pt)
    jump = hamiltonian(v, 0) - hamiltonian(u, 0)
    assert jump == pytest.approx(2 * np.sum(np.imag(2 * pt.roots())),
                                 abs=1e-6)


# -- E_s ----------------------------------------------------------------------

def test_energy_vacuum(grid):
    assert energy_Es(GridField.zero(grid), 0.37) == 0.0


def test_energy_integer_values(q0):
    assert energy_Es(q0, 0.0) == pytest.approx(4.0, abs=1e-8)
    assert energy_Es(q0, 1.0) == pytest.approx(4.0 - 16.0 / 3.0, abs=1e-7)
    with pytest.raises(DomainError):
        energy_Es(q0, 3.0)
    with pytest.raises(DomainError):
        energy_Es(q0, -0.5)


def test_energy_small_data(grid):
    u = GridField(grid, 0.05 * np.exp(-grid.x ** 2 / 2) + 0j)
    mass = quad_mass(u)
    assert abs(energy_Es(u, 0.0) - mass) <= 1e-3 * mass


def test_energy_small_soliton_mass(grid):
    # one soliton at z = i/4: E_0 = 2 Xi_0(i/2) = 2 Im(i/2) = 1
    pt = phase_point_from_kappas([0.25j], [0.0])
    q = add_solitons(GridField.zero(grid), pt)
    assert energy_Es(q, 0.0) == pytest.approx(1.0, abs=1e-4)
    assert quad_mass(q) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("s", [-0.25, 0.25, 0.5, 0.75])
def test_energy_fractional_soliton_oracle(grid, s):
    # exact value for a soliton below the ray: E_s = 2 int_0^{2lam}(1-t^2)^s
    lam = 0.3
    pt = phase_point_from_kappas([1j * lam], [0.0])
    q = add_solitons(GridField.zero(grid), pt)
    oracle = 2 * quad(lambda t: (1 - t * t) ** s, 0, 2 * lam)[0]
    assert energy_Es(q, s) == pytest.approx(oracle, abs=2e-6)


def test_energy_pole_on_ray(q0):
    # the eigenvalue at i puts 2z = 2i on the integration ray
    with pytest.raises(PoleOnRayError):
        energy_Es(q0, 0.5)


def test_xi_s_straight_segment():
    # Xi_0(z) = Im z; Xi_s along the imaginary axis is a real integral
    assert xi_s(0.5j, 0.0) == pytest.approx(0.5)
    want = quad(lambda t: (1 - t * t) ** 0.25, 0, 0.6)[0]
    assert xi_s(0.6j, 0.25) == pytest.approx(want, abs=1e-10)
    with pytest.raises(DomainError):
        xi_s(2.0j, 0.5)  # path crosses the cut


# -- trace residual ------------------------------------------------------------

def test_trace_residual_vacuum(grid):
    assert trace_residual(GridField.zero(grid)) == 0.0


def test_trace_residual_q0(q0):
    assert trace_residual(q0) < 1e-6


def test_trace_residual_gaussian(grid):
    u = GridField(grid, 0.1 * np.exp(-grid.x ** 2 / 4) + 0j)
    assert trace_residual(u) < 1e-5


def test_trace_residual_soliton_plus_gaussian(grid):
    bump = GridField(grid, 0.15 * np.exp(-((grid.x - 5) / 3) ** 2) + 0j)
    v = add_solitons(bump, phase_point_from_kappas([1.2j], [0.0]))
    assert trace_residual(v) < 1e-6


def test_energy_report_json(grid):
    u = GridField(grid, 0.1 * np.exp(-grid.x ** 2 / 4) + 0j)
    rep = energy_report(u, s_values=(0.25,))
    import json
    doc = json.loads(rep.to_json())
    assert len(doc["H"]) == 5
    assert "0.25" in doc["Es"]
    assert doc["trace_residual"] < 1e-5
