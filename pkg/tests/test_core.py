import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solitonforge import (BetaPoly, DomainError, Grid, GridField, PhasePoint,
                          SpectrumSym, hs_norm, phase_point_from_kappas,
                          reduce_mod_char, roots_from_sym, sym_from_roots)
from solitonforge.core import beta_interpolate, char_poly_real, cluster_roots

from conftest import quad_mass, soliton_profile


def test_grid_invariants():
    with pytest.raises(DomainError):
        Grid(x_min=0.0, dx=0.1, n=4)
    with pytest.raises(DomainError):
        Grid(x_min=0.0, dx=-0.1, n=64)
    g = Grid.centered(64, 16.0)
    assert g.length == pytest.approx(16.0)
    assert g.x[0] == pytest.approx(-8.0)


def test_field_validation_and_arithmetic(grid):
    with pytest.raises(DomainError):
        GridField(grid, np.ones(7))
    with pytest.raises(DomainError):
        GridField(grid, np.full(grid.n, np.nan))
    f = GridField(grid, np.exp(-grid.x ** 2) + 0j)
    g2 = 2.0 * f - f
    assert np.allclose(g2.values, f.values)
    assert f.values.flags.writeable is False


def test_field_tail_warning(grid):
    flat = GridField(grid, np.ones(grid.n, dtype=complex))
    with pytest.warns(UserWarning):
        assert not flat.check_localized()


# -- symmetric coordinates ---------------------------------------------------

def test_sym_from_roots_examples():
    assert np.allclose(sym_from_roots([1j]).s, [1j])
    assert np.allclose(sym_from_roots([1j, 2j]).s, [3j, -5.0])
    assert np.allclose(sym_from_roots([1j, 1j]).s, [2j, -2.0])


def test_sym_rejects_lower_half():
    with pytest.raises(DomainError):
        sym_from_roots([1j, 0.5 - 0.2j])


def test_sym_permutation_bit_identical():
    roots = [0.3 + 1.1j, -0.2 + 0.7j, 1.5j]
    a = sym_from_roots(roots).s
    b = sym_from_roots(roots[::-1]).s
    c = sym_from_roots([roots[1], roots[2], roots[0]]).s
    assert np.array_equal(a, b) and np.array_equal(a, c)


def test_roots_from_sym_examples():
    assert np.allclose(roots_from_sym(SpectrumSym([1j])), [1j])
    # double root -> cluster mean with multiplicity
    rts = roots_from_sym(SpectrumSym([2j, -2.0]))
    assert len(rts) == 2 and np.allclose(rts, [1j, 1j], atol=1e-6)
    # companion-matrix route for distinct roots
    rts = sorted(roots_from_sym(SpectrumSym([3j, -5.0])), key=lambda z: z.imag)
    assert np.allclose(rts, [1j, 2j], atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(0.1, 4)),
                min_size=1, max_size=5))
def test_sym_round_trip_property(pairs):
    roots = np.array([complex(a, b) for a, b in pairs])
    if len(roots) > 1:
        d = np.abs(roots[:, None] - roots[None, :])
        np.fill_diagonal(d, 1.0)
        if d.min() < 1e-2:
            return
    spec = sym_from_roots(roots)
    back = sym_from_roots(roots_from_sym(spec))
    assert np.max(np.abs(back.s - spec.s)) <= 1e-8 * (1 + np.abs(spec.s)).max()


def test_cluster_roots():
    merged = cluster_roots([1j, 1.0005j, 2j])
    assert [m for _, m in merged] == [2, 1]
    assert merged[0][0] == pytest.approx(1.00025j)


def test_reduce_mod_char_examples():
    s1 = SpectrumSym([1j])
    # z^2 = -1 mod (z^2+1)
    r = reduce_mod_char([0, 0, 1.0], s1)
    assert np.allclose(r.coeffs, [-1.0, 0.0])
    # 2z^2 -> -2, so kappa-dot = i(-2) matches the N=1 NLS rate i(2z)^2/2
    r2 = reduce_mod_char([0, 0, 2.0], s1)
    assert complex(r2.kappa(1j)) == pytest.approx(-2j)
    # identity below the modulus degree
    r3 = reduce_mod_char([0.5, -1.5], s1)
    assert np.allclose(r3.coeffs, [0.5, -1.5])


def test_reduce_mod_char_matches_roots():
    spec = sym_from_roots([0.4 + 0.9j, -0.3 + 1.6j])
    p = np.array([0.2, 0.0, -1.0, 0.7, 0.3])  # degree 4 >= 2N
    r = reduce_mod_char(p, spec)
    for z in roots_from_sym(spec):
        lhs = np.polynomial.polynomial.polyval(z, p)
        assert abs(r(z) - lhs) <= 1e-9 * max(1.0, abs(lhs))
        assert abs(r(np.conj(z)) - np.polynomial.polynomial.polyval(
            np.conj(z), p)) <= 1e-9 * max(1.0, abs(lhs))


def test_char_poly_real_is_real_and_monic():
    spec = sym_from_roots([0.4 + 0.9j, 1.3j])
    c = char_poly_real(spec)
    assert c.dtype == float and c[-1] == pytest.approx(1.0)
    for z in (0.4 + 0.9j, 1.3j):
        val = np.polynomial.polynomial.polyval(z, c)
        assert abs(val) < 1e-12


# -- Sobolev norms ------------------------------------------------------------

def test_hs_norm_examples(grid, q0):
    assert hs_norm(GridField.zero(grid), 0.5) == 0.0
    # ||Q0||_{L^2} = 2 since the mass integral is 4
    assert hs_norm(q0, 0.0) == pytest.approx(2.0, abs=1e-12)
    u = GridField(grid, np.exp(-grid.x ** 2 / 3) * np.exp(0.4j * grid.x))
    assert hs_norm(u, 0.0) ** 2 == pytest.approx(quad_mass(u), rel=1e-9)
    with pytest.raises(DomainError):
        hs_norm(u, -0.5)


# -- beta / phase points ------------------------------------------------------

def test_phase_point_round_trip_json():
    pt = phase_point_from_kappas([0.5 + 1j, 1.7j], [0.3 + 0.1j, -0.2j])
    back = PhasePoint.from_json(pt.to_json())
    assert np.allclose(back.spectrum.s, pt.spectrum.s)
    assert np.allclose(back.beta.coeffs, pt.beta.coeffs)


def test_phase_point_from_kappas_reproduces_kappas():
    roots = [0.5 + 1j, 1.7j]
    kappas = np.array([0.3 + 0.1j, -0.2j])
    pt = phase_point_from_kappas(roots, kappas)
    assert np.allclose(pt.beta.kappa(np.array(roots)), kappas, atol=1e-12)


def test_beta_interpolate_with_derivative():
    beta = beta_interpolate([1j], [0.2 + 0.4j], derivs=[0.3 - 0.1j])
    assert len(beta.coeffs) == 4
    assert complex(beta(1j)) == pytest.approx(0.2 + 0.4j)
    assert complex(beta.derivative(1j)) == pytest.approx(0.3 - 0.1j)


def test_phase_point_requires_matching_beta():
    with pytest.raises(DomainError):
        PhasePoint(SpectrumSym([1j]), BetaPoly([0.0, 0.0, 0.0]))


def test_field_csv_round_trip(tmp_path, grid):
    u = GridField(grid, soliton_profile(grid.x, 0.4 + 1.1j, 0.3 + 0.2j))
    path = tmp_path / "field.csv"
    u.to_csv(path)
    back = GridField.from_csv(path)
    assert back.grid.n == grid.n
    assert np.max(np.abs(back.values - u.values)) < 1e-15
    # byte-identical on rewrite (17 significant digits)
    path2 = tmp_path / "field2.csv"
    back.to_csv(path2)
    assert path.read_bytes() == path2.read_bytes()
