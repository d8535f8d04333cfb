import numpy as np
import pytest

from solitonforge import (DomainError, GridField, ZeroOnContourError,
                          beta_equivalent, extract_scattering_data, jost_pair,
                          locate_spectrum, phase_point_from_kappas,
                          transmission_inv)
from solitonforge.backlund import add_solitons
from solitonforge.scattering import SpectrumReport

from conftest import soliton_profile, transmission_product


def test_vacuum_jost(grid):
    zero = GridField.zero(grid)
    left, right = jost_pair(zero, 0.7 + 1.3j)
    assert np.allclose(left.comp1, 1.0) and np.allclose(left.comp2, 0.0)
    assert np.allclose(right.comp1, 0.0) and np.allclose(right.comp2, 1.0)
    assert transmission_inv(zero, 1.1j) == pytest.approx(1.0)


def test_jost_floor(grid, q0):
    with pytest.raises(DomainError):
        jost_pair(q0, 1.0 + 0.01j)
    with pytest.raises(DomainError):
        transmission_inv(q0, 0.5 + 0.001j)


def test_transmission_oracle_q0(q0):
    # T(z) = (z+i)/(z-i) for Q0, so T^{-1}(2i) = 1/3 and a zero at i
    assert abs(transmission_inv(q0, 2j) - 1.0 / 3.0) < 1e-8
    assert abs(transmission_inv(q0, 1j)) < 1e-8


def test_left_jost_reaches_T_inverse(q0):
    left, _ = jost_pair(q0, 2j)
    assert abs(left.comp1[-1] - 1.0 / 3.0) < 1e-8


def test_transmission_against_product_formula(grid):
    z0 = -0.4 + 1.3j
    u = GridField(grid, soliton_profile(grid.x, z0, 0.2 - 0.5j))
    zs = np.array([1j, 2j, 1 + 1j, -2 + 0.6j, 0.08j])
    got = transmission_inv(u, zs)
    want = 1.0 / transmission_product([z0], zs)
    assert np.max(np.abs(got - want) / np.abs(want)) < 1e-8


def test_wronskian_constant_across_grid(grid, q0):
    z = 0.5 + 1.4j
    left, right = jost_pair(q0, z)
    w = left.comp1 * right.comp2 - left.comp2 * right.comp1
    ref = w[grid.n // 2]
    assert np.max(np.abs(w - ref)) < 1e-8 * abs(ref)


def test_transmission_left_right_consistency(grid):
    # |T^-1| read from the left pair's far-field equals the right pair's
    u = GridField(grid, soliton_profile(grid.x, 0.3 + 1.0j, 0.4 + 0.1j)
                  + 0.05 * np.exp(-grid.x ** 2 / 5))
    z = 0.8 + 0.9j
    left, right = jost_pair(u, z)
    via_left = left.comp1[-1]       # e^{izx} psi_l -> T^-1 at +inf
    via_right = right.comp2[0]      # e^{-izx} psi_r -> T^-1 at -inf
    w = transmission_inv(u, z)
    assert abs(abs(via_left) - abs(via_right)) < 1e-8
    assert abs(via_left - w) < 1e-8 and abs(via_right - w) < 1e-8


def test_scaling_covariance(grid):
    # T(u_lam, z) = T(u, z/lam) for u_lam = lam u(lam x)
    lam = 1.5

    def profile(x):
        return soliton_profile(x, 1j, 0.0) + 0.05 * np.exp(-x ** 2 / 4)

    u = GridField(grid, profile(grid.x))
    u_lam = GridField(grid, lam * profile(lam * grid.x))
    for z in (2.2j, 1 + 1.1j):
        a = transmission_inv(u_lam, z)
        b = transmission_inv(u, z / lam)
        assert abs(a - b) < 1e-6 * max(1.0, abs(b))


# -- locate_spectrum ----------------------------------------------------------

def test_locate_vacuum(grid):
    rep = locate_spectrum(GridField.zero(grid), (-1, 1, 0.5, 2))
    assert rep.count == 0 and rep.spectrum is None


def test_locate_q0(q0):
    rep = locate_spectrum(q0, (-1, 1, 0.5, 2))
    assert rep.count == 1
    assert abs(rep.root_multiset()[0] - 1j) < 1e-7


def test_locate_two_soliton_round_trip(grid):
    pt = phase_point_from_kappas([1j, 0.5 + 1.5j], [0.0, 0.0])
    v = add_solitons(GridField.zero(grid), pt)
    rep = locate_spectrum(v, (-1, 1, 0.5, 2))
    assert rep.count == 2
    got = np.sort_complex(rep.root_multiset())
    assert np.max(np.abs(got - np.sort_complex(np.array([1j, 0.5 + 1.5j])))) \
        < 1e-6


def test_locate_rejects_zero_on_contour(q0):
    # a zero sitting on the boundary is rejected either by the |T^-1| floor
    # (sample lands on it) or by a non-integer winding
    from solitonforge import ResolutionError
    with pytest.raises((ZeroOnContourError, ResolutionError)):
        locate_spectrum(q0, (-1, 1, 0.999999, 2))


def test_locate_count_stable_under_refinement(grid, q0):
    from solitonforge import Grid
    fine = Grid.centered(8192, 80.0)
    qf = GridField(fine, soliton_profile(fine.x, 1j, 0.0))
    assert locate_spectrum(qf, (-1, 1, 0.5, 2)).count == \
        locate_spectrum(q0, (-1, 1, 0.5, 2)).count == 1


def test_report_json(q0):
    rep = locate_spectrum(q0, (-1, 1, 0.5, 2))
    import json
    doc = json.loads(rep.to_json())
    assert doc["count"] == 1
    assert doc["roots"][0][1] == pytest.approx(1.0, abs=1e-7)
    assert doc["region"] == [-1, 1, 0.5, 2]


# -- scattering data ----------------------------------------------------------

def test_extract_kappa_zero(grid):
    pt = phase_point_from_kappas([1j], [0.0])
    v = add_solitons(GridField.zero(grid), pt)
    kap, _ = extract_scattering_data(v, locate_spectrum(v, (-1, 1, 0.5, 2)))
    # kappa = 0 mod i pi
    assert abs(kap[0].real) < 1e-7
    assert min(abs(kap[0].imag), abs(abs(kap[0].imag) - np.pi)) < 1e-7


def test_extract_translated_soliton(grid):
    a = 2.5
    v = GridField(grid, soliton_profile(grid.x, 1j, a))
    kap, _ = extract_scattering_data(v, locate_spectrum(v, (-1, 1, 0.5, 2)))
    assert abs(kap[0] - a) < 1e-6


def test_extract_beta_round_trip(grid):
    rng = np.random.default_rng(2)
    pt = phase_point_from_kappas(
        [0.4 + 0.9j, -0.3 + 1.4j],
        [complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(2)])
    v = add_solitons(GridField.zero(grid), pt)
    _, beta = extract_scattering_data(v, locate_spectrum(v, (-1, 1, 0.5, 2)))
    assert beta_equivalent(beta, pt.beta, pt.spectrum, tol=1e-6)


def test_extract_empty_report_raises(grid):
    rep = SpectrumReport(0, None, (), (-1, 1, 0.5, 2), 256)
    with pytest.raises(DomainError):
        extract_scattering_data(GridField.zero(grid), rep)


def test_eigenfunction_product_cross_check(q0):
    # optional cross-check of (d/dz)T^-1 = 2i int psi_1 psi_2 dx at z=i:
    # the exact eigenfunction is sech(2x) (e^-x, -e^x), normalized so that
    # psi -> e^{-izx}(1,0) at -inf, i.e. psi = psi_l
    x = q0.grid.x
    prod = (1.0 / np.cosh(2 * x)) ** 2 * np.exp(-x) * (-np.exp(x)) / 4.0
    integral = 2j * q0.grid.dx * np.sum(prod)
    h = 1e-5
    fp = (transmission_inv(q0, 1j + h) - transmission_inv(q0, 1j - h)) / (2 * h)
    assert abs(fp - integral) < 1e-6
