"""Grids, complex fields, discrete Sobolev norms, and symmetric-coordinate algebra.

Spectra are stored as power sums s_j = sum_n z_n^j, the smooth coordinates for
unordered root multisets; Newton's identities bridge to monic polynomial
coefficients whenever individual roots are needed.  Scattering parameters are
real polynomials beta of degree <= 2N-1, with kappa_j = i*beta(z_j).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, DomainError

CLUSTER_TOL = 1e-3  # roots closer than this are treated as one multiple root

_FMT = "%.17g"


def _as_complex_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if not np.all(np.isfinite(arr.view(float))):
        raise DomainError("non-finite entries")
    return arr


# ---------------------------------------------------------------------------
# grids and fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform periodic 1-d grid: points x_min + j*dx, j = 0..n-1."""

    x_min: float
    dx: float
    n: int

    def __post_init__(self):
        if self.n < 8:
            raise DomainError("grid needs at least 8 samples")
        if not (self.dx > 0 and np.isfinite(self.dx) and np.isfinite(self.x_min)):
            raise DomainError("grid spacing must be positive and finite")

    @classmethod
    def centered(cls, n: int = 4096, length: float = 80.0) -> "Grid":
        return cls(x_min=-length / 2.0, dx=length / n, n=n)

    @property
    def length(self) -> float:
        return self.n * self.dx

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)


def grid_for_spectrum(roots, n: int = 4096, min_length: float = 40.0) -> Grid:
    """Grid long enough that soliton tails at the slowest decay rate reach 1e-9.

    Uses the spec'd bound length >= 20 / min Im z, padded by the soliton
    centers if those are known to be away from the origin.
    """
    roots = np.atleast_1d(_as_complex_array(roots))
    min_decay = float(np.min(roots.imag))
    if min_decay <= 0:
        raise DomainError("spectrum must lie in the open upper half-plane")
    length = max(min_length, 20.0 / min_decay)
    return Grid.centered(n=n, length=length)


@dataclass(frozen=True)
class GridField:
    """Complex-valued state sampled on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = _as_complex_array(self.values)
        if vals.shape != (self.grid.n,):
            raise DomainError("values length must match grid")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        # scratch space for derived data (e.g. refined potential samples);
        # safe because values are frozen
        object.__setattr__(self, "_cache", {})

    @classmethod
    def zero(cls, grid: Grid) -> "GridField":
        return cls(grid, np.zeros(grid.n, dtype=complex))

    def with_values(self, values) -> "GridField":
        return GridField(self.grid, values)

    def __add__(self, other: "GridField") -> "GridField":
        if other.grid != self.grid:
            raise DomainError("grid mismatch")
        return GridField(self.grid, self.values + other.values)

    def __sub__(self, other: "GridField") -> "GridField":
        if other.grid != self.grid:
            raise DomainError("grid mismatch")
        return GridField(self.grid, self.values - other.values)

    def __mul__(self, c) -> "GridField":
        return GridField(self.grid, self.values * c)

    __rmul__ = __mul__

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.dx * np.sum(np.abs(self.values) ** 2)))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def tail_magnitude(self) -> float:
        """Largest |u| over the outer 2% of samples on each side."""
        m = max(1, self.grid.n // 50)
        a = np.abs(self.values)
        return float(max(a[:m].max(), a[-m:].max()))

    def check_localized(self, rel_tol: float = 1e-6) -> bool:
        """Boundary-tail check; warns (never raises) when the state leaks."""
        peak = self.sup_norm()
        if peak == 0.0:
            return True
        ok = self.tail_magnitude() <= rel_tol * peak
        if not ok:
            warnings.warn("field tail exceeds %.0e of its peak at the boundary"
                          % rel_tol, stacklevel=2)
        return ok

    # -- serialization: CSV with header x,re,im, 17 significant digits -------

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x,re,im\n")
            for x, v in zip(self.grid.x, self.values):
                fh.write((_FMT + "," + _FMT + "," + _FMT + "\n")
                         % (x, v.real, v.imag))

    @classmethod
    def from_csv(cls, path) -> "GridField":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        if data.ndim != 2 or data.shape[1] != 3 or data.shape[0] < 8:
            raise DomainError("expected CSV columns x,re,im")
        x = data[:, 0]
        dx = x[1] - x[0]
        if not np.allclose(np.diff(x), dx, rtol=0, atol=1e-9 * abs(dx)):
            raise DomainError("grid must be uniform")
        grid = Grid(x_min=float(x[0]), dx=float(dx), n=len(x))
        return cls(grid, data[:, 1] + 1j * data[:, 2])


def hs_norm(u: GridField, s: float) -> float:
    """Discrete Sobolev norm (sum_k (1+k^2)^s |u_hat(k)|^2 dk)^(1/2).

    Normalized so that s=0 coincides with the trapezoid L^2 norm (Parseval).
    """
    if s <= -0.5:
        raise DomainError("hs_norm requires s > -1/2")
    k = u.grid.wavenumbers
    uhat2 = np.abs(np.fft.fft(u.values)) ** 2
    total = (u.grid.dx / u.grid.n) * np.sum((1.0 + k * k) ** s * uhat2)
    return float(np.sqrt(total))


# ---------------------------------------------------------------------------
# symmetric spectral coordinates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumSym:
    """Unordered spectral parameters stored as power sums s_j = sum z_n^j."""

    s: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", _as_complex_array(self.s).copy())
        self.s.setflags(write=False)
        if self.s.ndim != 1 or len(self.s) == 0:
            raise DomainError("power sums must be a nonempty 1-d sequence")

    @property
    def N(self) -> int:
        return len(self.s)


def sym_from_roots(roots) -> SpectrumSym:
    """Power sums of a root multiset in the open upper half-plane.

    Roots are summed in sorted order so any permutation of the input gives a
    bit-identical result.
    """
    roots = np.atleast_1d(_as_complex_array(roots))
    if np.any(roots.imag <= 0):
        raise DomainError("all spectral parameters need Im z > 0")
    order = np.lexsort((roots.imag, roots.real))
    zs = roots[order]
    n = len(zs)
    s = np.empty(n, dtype=complex)
    powers = zs.copy()
    for j in range(n):
        s[j] = powers.sum()
        if j + 1 < n:
            powers = powers * zs
    return SpectrumSym(s)


def _newton_coefficients(s: np.ndarray) -> np.ndarray:
    """Monic coefficients of prod (z - z_j) from power sums, descending order."""
    n = len(s)
    e = np.zeros(n + 1, dtype=complex)
    e[0] = 1.0
    for k in range(1, n + 1):
        acc = 0.0 + 0.0j
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * s[i - 1]
        e[k] = acc / k
    # prod (z - z_j) = sum_k (-1)^k e_k z^(n-k)
    return np.array([(-1) ** k * e[k] for k in range(n + 1)], dtype=complex)


def cluster_roots(roots, tol: float = CLUSTER_TOL):
    """Merge roots within `tol` into (mean, multiplicity) clusters."""
    roots = list(np.atleast_1d(_as_complex_array(roots)))
    clusters: list[list[complex]] = []
    for z in sorted(roots, key=lambda w: (w.real, w.imag)):
        for members in clusters:
            if any(abs(z - w) < tol for w in members):
                members.append(z)
                break
        else:
            clusters.append([z])
    merged = [(np.mean(members), len(members)) for members in clusters]
    merged.sort(key=lambda pair: (pair[0].real, pair[0].imag))
    return merged


def roots_from_sym(spec: SpectrumSym, cluster_tol: float = CLUSTER_TOL) -> np.ndarray:
    """Recover the root multiset from power sums (companion-matrix eigenvalues).

    Clustered roots (pairwise distance < cluster_tol) are reported as the
    cluster mean with multiplicity; the map s -> z is only Hoelder-1/N stable,
    so tighter splitting would be noise.
    """
    coeffs = _newton_coefficients(spec.s)
    roots = np.roots(coeffs)
    if np.any(roots.imag <= 0):
        raise DomainError("recovered a root outside the open upper half-plane")
    out = []
    for z, mult in cluster_roots(roots, tol=cluster_tol):
        out.extend([z] * mult)
    return np.array(out, dtype=complex)


def char_poly_real(spec: SpectrumSym) -> np.ndarray:
    """Real coefficients (ascending) of P_z * P_zbar, degree 2N."""
    p = _newton_coefficients(spec.s)[::-1]  # ascending
    q = np.conj(p)
    full = np.polynomial.polynomial.polymul(p, q)
    return np.real_if_close(full, tol=1e6).real.astype(float)


def reduce_mod_char(p_coeffs, spec: SpectrumSym) -> "BetaPoly":
    """Remainder of a real polynomial modulo P_z * P_zbar, degree <= 2N-1."""
    modulus = char_poly_real(spec)
    p = np.atleast_1d(np.asarray(p_coeffs, dtype=float))
    if not np.all(np.isfinite(p)):
        raise DomainError("polynomial coefficients must be finite")
    if len(p) <= 2 * spec.N:
        rem = p
    else:
        _, rem = np.polynomial.polynomial.polydiv(p, modulus)
    out = np.zeros(2 * spec.N)
    out[: len(rem)] = rem
    return BetaPoly(out)


# ---------------------------------------------------------------------------
# scattering-parameter polynomial
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BetaPoly:
    """Real polynomial beta of degree <= 2N-1; kappa_j = i*beta(z_j).

    The raw coefficients are stored as-is; the mod-pi ambiguity of Re beta(z_j)
    is quotiented only when comparing (see `beta_equivalent`).
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float)).copy()
        if not np.all(np.isfinite(c)):
            raise DomainError("beta coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.coeffs)

    def derivative(self, z):
        dc = np.polynomial.polynomial.polyder(self.coeffs)
        return np.polynomial.polynomial.polyval(z, dc)

    def kappa(self, z):
        return 1j * self(z)

    def shifted(self, delta) -> "BetaPoly":
        d = np.zeros_like(self.coeffs)
        d[: len(np.atleast_1d(delta))] = np.atleast_1d(delta)
        return BetaPoly(self.coeffs + d)


@dataclass(frozen=True)
class PhasePoint:
    """Element (spectrum, beta) of the pure-soliton phase space."""

    spectrum: SpectrumSym
    beta: BetaPoly = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.beta is None:
            object.__setattr__(self, "beta", BetaPoly(np.zeros(2 * self.spectrum.N)))
        if len(self.beta.coeffs) != 2 * self.spectrum.N:
            raise DomainError("beta must have exactly 2N coefficients")

    @property
    def N(self) -> int:
        return self.spectrum.N

    def roots(self) -> np.ndarray:
        return roots_from_sym(self.spectrum)

    def kappas(self) -> np.ndarray:
        return self.beta.kappa(self.roots())

    def to_json(self) -> str:
        return json.dumps({
            "N": self.N,
            "s": [[z.real, z.imag] for z in self.spectrum.s],
            "beta": list(self.beta.coeffs),
        })

    @classmethod
    def from_json(cls, text: str) -> "PhasePoint":
        doc = json.loads(text)
        s = np.array([complex(re, im) for re, im in doc["s"]])
        if len(s) != doc["N"]:
            raise DomainError("inconsistent PhasePoint JSON")
        return cls(SpectrumSym(s), BetaPoly(np.asarray(doc["beta"], dtype=float)))


def beta_interpolate(roots, values, derivs=None) -> BetaPoly:
    """Real beta with beta(z_j) = values[j] (and beta'(z_j) = derivs[j] at doubles).

    `roots` lists distinct nodes; a node with a derivative condition counts
    twice toward the degree.  Raises ConditioningError when the real 2N x 2N
    interpolation system has condition number above 1e10.
    """
    roots = np.atleast_1d(_as_complex_array(roots))
    values = np.atleast_1d(_as_complex_array(values))
    if derivs is None:
        derivs = [None] * len(roots)
    n_cond = len(roots) + sum(d is not None for d in derivs)
    dim = 2 * n_cond
    rows, rhs = [], []
    powers = np.arange(dim)
    for z, v, d in zip(roots, values, derivs):
        zp = z ** powers
        rows += [zp.real, zp.imag]
        rhs += [v.real, v.imag]
        if d is not None:
            dz = powers * z ** np.maximum(powers - 1, 0)
            dz[0] = 0.0
            rows += [dz.real, dz.imag]
            rhs += [d.real, d.imag]
    mat = np.array(rows, dtype=float)
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > 1e10:
        raise ConditioningError("beta interpolation system condition %.2e" % cond)
    return BetaPoly(np.linalg.solve(mat, np.array(rhs)))


def phase_point_from_kappas(roots, kappas) -> PhasePoint:
    """PhasePoint with prescribed simple roots and kappa_j = i*beta(z_j)."""
    roots = np.atleast_1d(_as_complex_array(roots))
    kappas = np.atleast_1d(_as_complex_array(kappas))
    beta = beta_interpolate(roots, -1j * kappas)
    return PhasePoint(sym_from_roots(roots), beta)


def beta_equivalent(b1: BetaPoly, b2: BetaPoly, spec: SpectrumSym,
                    tol: float = 1e-6) -> bool:
    """Equality of scattering parameters under the discrete relation A.

    beta_1 ~ beta_2 iff beta_1(z_j) - beta_2(z_j) in pi*Z at every root, with
    matching derivatives (exactly, no quotient) at multiple roots.
    """
    for z, mult in cluster_roots(roots_from_sym(spec)):
        d = complex(b1(z) - b2(z))
        re_mod = (d.real + np.pi / 2) % np.pi - np.pi / 2
        if abs(re_mod) > tol or abs(d.imag) > tol:
            return False
        if mult > 1:
            dd = complex(b1.derivative(z) - b2.derivative(z))
            if abs(dd) > tol * max(1.0, abs(b1.derivative(z))):
                return False
    return True
