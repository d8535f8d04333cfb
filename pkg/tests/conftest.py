"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's computational paths:
soliton profiles come from the explicit sech formula, transmission values
from the Blaschke product, masses from plain quadrature.
"""

import numpy as np
import pytest

from solitonforge import Grid, GridField


@pytest.fixture(scope="session")
def grid():
    return Grid.centered(4096, 80.0)


@pytest.fixture(scope="session")
def q0(grid):
    return GridField(grid, soliton_profile(grid.x, 1j, 0.0))


def soliton_profile(x, z, kappa):
    """Exact one-soliton profile for spectral z and scattering kappa."""
    z = complex(z)
    kappa = complex(kappa)
    lam, xi = z.imag, z.real
    x0 = kappa.real / lam
    theta = kappa.imag
    return np.exp(-2j * (theta + xi * x)) * lam * 2.0 / np.cosh(
        2.0 * lam * (x - x0))


def transmission_product(roots, z):
    """Pure-soliton transmission coefficient T(z) as a Blaschke product."""
    out = np.ones_like(np.asarray(z, dtype=complex))
    for r in np.atleast_1d(np.asarray(roots, dtype=complex)):
        out = out * (z - np.conj(r)) / (z - r)
    return out


def quad_mass(field):
    """Independent L^2 mass by direct Riemann sum (periodic trapezoid)."""
    return field.grid.dx * float(np.sum(np.abs(field.values) ** 2))


def random_point(rng, n_solitons, im_range=(0.4, 1.8), re_range=(-1.0, 1.0),
                 min_gap=0.25):
    """A PhasePoint with well-separated random roots and random kappas."""
    from solitonforge import phase_point_from_kappas
    roots = []
    while len(roots) < n_solitons:
        z = complex(rng.uniform(*re_range), rng.uniform(*im_range))
        if all(abs(z - w) > min_gap for w in roots):
            roots.append(z)
    kappas = [complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
              for _ in roots]
    return phase_point_from_kappas(roots, kappas)
