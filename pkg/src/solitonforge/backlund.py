"""Soliton addition and removal by iterated Backlund transforms.

Addition dresses a background u with unbounded waves
psi_j = e^{-kappa_j} psi_l + e^{kappa_j} psi_r at the prescribed spectral
parameters; removal undresses with eigenfunctions.  Both go through the same
positive-definite Gram system per grid point,

    M_jk(x) = i psi_k(x)* psi_j(x) / (z_j - conj(z_k)),

whose solution gives the pointwise correction 2 sum m_kj psi_j^1 conj(psi_k^2).
Every formula here is invariant under rescaling each wave by an arbitrary
nonzero factor per grid point, which is what makes the overflow-free
unit-normalized storage valid.

A double eigenvalue (N=2) is handled exactly by two chained single transforms,
the second seeded with the z-derivative jet of the holomorphic wave family --
no confluent limits are taken.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (CLUSTER_TOL, GridField, PhasePoint, cluster_roots,
                   grid_for_spectrum)
from .errors import (BackgroundSpectrumError, ConfluenceError, DomainError,
                     EmptySpectrumError, SpectralError)
from .scattering import (IM_FLOOR, WavePair, _RootData, _extract_with_data,
                         _jost_trajectories, _transmission_inv_raw,
                         locate_spectrum)

JET_STEP = 1e-6          # z-step for complex-step jets of the wave family
GRAM_COND_LIMIT = 1e12


# ---------------------------------------------------------------------------
# wave construction
# ---------------------------------------------------------------------------

def _unit_waves(u: GridField, zs, kappas) -> np.ndarray:
    """Unbounded waves at (z_j, kappa_j), unit-normalized per grid point.

    Returns shape (n, 2, N).  Components are exp-rescaled before the two Jost
    branches are combined, so nothing overflows even deep in the tails.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    kappas = np.atleast_1d(np.asarray(kappas, dtype=complex))
    left, right = _jost_trajectories(u, zs)
    x = u.grid.x[:, None]
    log_l = -kappas[None, :] - 1j * zs[None, :] * x
    log_r = kappas[None, :] + 1j * zs[None, :] * x
    t = np.maximum(log_l.real, log_r.real)
    cl = np.exp(log_l - t)[:, None, :]
    cr = np.exp(log_r - t)[:, None, :]
    waves = cl * left + cr * right
    norm = np.sqrt(np.sum(np.abs(waves) ** 2, axis=1, keepdims=True))
    return waves / norm


def unbounded_wave(u: GridField, z: complex, kappa: complex) -> WavePair:
    """The unbounded z-wave e^{-kappa} psi_l + e^{kappa} psi_r.

    Stored per-point unit-normalized ("unit" renorm tag); any Gram-type use is
    gauge invariant, so the normalization carries no information loss.
    """
    z = complex(z)
    if z.imag < IM_FLOOR:
        raise DomainError("unbounded_wave requires Im z >= %g" % IM_FLOOR)
    w = _transmission_inv_raw(u, [z])[0]
    if abs(w) < 1e-6:
        raise SpectralError("z is (numerically) an eigenvalue of the background")
    vals = _unit_waves(u, [z], [kappa])
    return WavePair(u.grid, vals[:, 0, 0].copy(), vals[:, 1, 0].copy(), "unit", z)


@dataclass(frozen=True)
class WaveSet:
    """Waves (and optional z-jets) attached to the roots of one background."""

    z: np.ndarray
    waves: np.ndarray            # (n, 2, N)
    jets: np.ndarray | None = None

    @property
    def N(self) -> int:
        return len(self.z)

    def residuals(self, u: GridField) -> np.ndarray:
        """Sup-norm residual of the wave equation for each wave (gauge-fixed).

        Uses the ratio r = psi_2/psi_1 which obeys the gauge-free Riccati
        equation r' = 2 i z r - conj(u) - u r^2 away from zeros of psi_1.
        """
        out = np.empty(self.N)
        for j in range(self.N):
            w = self.waves[:, :, j]
            mask = np.abs(w[:, 0]) > 0.7  # unit-normalized: comp1 dominates
            r = np.where(mask, w[:, 1] / np.where(mask, w[:, 0], 1.0), 0.0)
            rp = _interior_derivative(r, u.grid.dx)
            rhs = 2j * self.z[j] * r - np.conj(u.values) - u.values * r * r
            good = mask.copy()
            for k in range(1, 4):   # the difference stencil spans +-3 points
                good &= np.roll(mask, k) & np.roll(mask, -k)
            good[:4] = good[-4:] = False
            out[j] = np.max(np.abs((rp - rhs)[good])) if good.any() else np.inf
        return out


def _interior_derivative(f: np.ndarray, dx: float) -> np.ndarray:
    """6th-order centered first derivative (ends filled with neighbors)."""
    d = np.zeros_like(f)
    c1, c2, c3 = 3 / 4, -3 / 20, 1 / 60
    d[3:-3] = (c1 * (f[4:-2] - f[2:-4]) + c2 * (f[5:-1] - f[1:-5])
               + c3 * (f[6:] - f[:-6])) / dx
    d[:3] = d[3]
    d[-3:] = d[-4]
    return d


# ---------------------------------------------------------------------------
# Gram assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GramMatrix:
    """Per-grid-point Gram matrices M_jk = i psi_k* psi_j / (z_j - conj(z_k))."""

    z: np.ndarray
    entries: np.ndarray          # (n, N, N)

    def condition(self) -> float:
        return float(np.max(np.linalg.cond(self.entries)))

    def cholesky_ok(self) -> bool:
        try:
            np.linalg.cholesky(self.entries)
            return True
        except np.linalg.LinAlgError:
            return False

    def pointwise_trace(self) -> np.ndarray:
        """tr A(x) = sum_kj m_kj psi_k* psi_j; equals 2 sum Im z_j exactly."""
        denom = self.z[:, None] - np.conj(self.z)[None, :]
        inner = self.entries * denom[None, :, :] / 1j
        sol = np.linalg.solve(self.entries, inner)
        return np.real(np.trace(sol, axis1=1, axis2=2))


def gram_matrix(z, waves) -> GramMatrix:
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    inner = np.einsum("xck,xcj->xjk", np.conj(waves), waves)
    denom = zs[:, None] - np.conj(zs)[None, :]
    return GramMatrix(zs, 1j * inner / denom[None, :, :])


def _gram_correction(gram: GramMatrix, waves: np.ndarray) -> np.ndarray:
    """The dressing term 2 sum_kj m_kj psi_j^1 conj(psi_k^2), per grid point."""
    M = gram.entries
    cond = gram.condition()
    if not np.isfinite(cond) or cond > GRAM_COND_LIMIT:
        raise ConfluenceError(
            "Gram condition %.2e: spectral parameters too close; cluster "
            "them or use the N=2 jet path" % cond)
    if not gram.cholesky_ok():
        # positive definite in exact arithmetic; nudge past roundoff
        M = M + (1e-14 * np.linalg.norm(M, axis=(1, 2), keepdims=True)
                 * np.eye(M.shape[1])[None])
    y = np.linalg.solve(M, waves[:, 0, :, None])[..., 0]
    return 2.0 * np.sum(np.conj(waves[:, 1, :]) * y, axis=1)


def wave_set_for(u: GridField, point: PhasePoint) -> WaveSet:
    """Unit-normalized unbounded waves of u at the (split) roots of `point`."""
    zs = _split_roots(point)
    kappas = point.beta.kappa(zs)
    return WaveSet(zs, _unit_waves(u, zs, kappas))


def _split_roots(point: PhasePoint) -> np.ndarray:
    """Root multiset with clusters separated by the clustering tolerance.

    Exact N=2 doubles never reach this (they take the jet path); for N > 2
    repeated roots this is the documented best-effort approximation.
    """
    out = []
    for z, mult in cluster_roots(point.roots()):
        if mult == 1:
            out.append(z)
        else:
            offsets = CLUSTER_TOL * (np.arange(mult) - (mult - 1) / 2.0)
            out.extend(z + offsets)
    return np.array(out, dtype=complex)


# ---------------------------------------------------------------------------
# soliton addition
# ---------------------------------------------------------------------------

def _background_region(roots) -> tuple:
    roots = np.atleast_1d(roots)
    x0 = float(roots.real.min()) - 1.0
    x1 = float(roots.real.max()) + 1.0
    y0 = max(0.05, 0.4 * float(roots.imag.min()))
    y1 = 1.5 * float(roots.imag.max()) + 0.5
    return (x0, x1, y0, y1)


def add_solitons(u: GridField, point: PhasePoint,
                 check_background: bool = True) -> GridField:
    """Nonlinearly add the pure multisoliton described by `point` to u.

    The background must be free of spectrum near the new roots.  Distinct
    roots go through the Gram solve; an exact double root (N=2) goes through
    the jet construction.
    """
    roots = point.roots()
    if np.any(roots.imag < IM_FLOOR):
        raise DomainError("spectral parameters need Im z >= %g" % IM_FLOOR)
    if check_background and u.sup_norm() > 0:
        rep = locate_spectrum(u, _background_region(roots))
        if rep.count:
            raise BackgroundSpectrumError(
                "background already has %d eigenvalue(s) near the new roots"
                % rep.count)

    clusters = cluster_roots(roots)
    if point.N == 2 and len(clusters) == 1 and clusters[0][1] == 2:
        return _add_double(u, clusters[0][0], point)

    ws = wave_set_for(u, point)
    corr = _gram_correction(gram_matrix(ws.z, ws.waves), ws.waves)
    return u.with_values(u.values + corr)


def pure_soliton(point: PhasePoint, grid=None, n: int = 4096) -> GridField:
    """The pure multisoliton B_+^N(0, point), on an automatic grid by default."""
    if grid is None:
        roots = point.roots()
        centers = point.beta.kappa(roots).real / roots.imag
        grid = grid_for_spectrum(roots, n=n, min_length=40.0 + 2 * np.max(
            np.abs(centers)) * 1.5)
    return add_solitons(GridField.zero(grid), point, check_background=False)


def _family_waves(u: GridField, zs, beta, scale_exponent) -> np.ndarray:
    """True (non-normalized) waves of the beta-family at a batch of z.

    All z share the per-point rescaling e^{-scale_exponent(x)} so divided
    differences across the batch stay meaningful.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    left, right = _jost_trajectories(u, zs)
    x = u.grid.x[:, None]
    log_l = -1j * beta(zs)[None, :] - 1j * zs[None, :] * x
    log_r = 1j * beta(zs)[None, :] + 1j * zs[None, :] * x
    t = scale_exponent[:, None]
    return (np.exp(log_l - t)[:, None, :] * left
            + np.exp(log_r - t)[:, None, :] * right)


def _single_dress(u_vals: np.ndarray, zeta: complex, wave: np.ndarray):
    """One Backlund step: u + 4 Im(zeta) psi_1 conj(psi_2) / |psi|^2."""
    dens = np.sum(np.abs(wave) ** 2, axis=1)
    return u_vals + 4.0 * zeta.imag * wave[:, 0] * np.conj(wave[:, 1]) / dens


def _jet_pair(u: GridField, zeta: complex, point: PhasePoint):
    """Base wave and propagated jet wave for an exact double root."""
    base = 1j * point.beta(zeta) + 1j * zeta * u.grid.x
    scale = np.abs(base.real)
    fam = _family_waves(u, [zeta, zeta + JET_STEP, zeta - JET_STEP],
                        point.beta, scale)
    psi = fam[:, :, 0]
    dpsi = (fam[:, :, 1] - fam[:, :, 2]) / (2 * JET_STEP)
    # D(u, zeta, psi) applied to the jet: L(u) d_z psi = psi + zeta d_z psi
    # turns the intertwiner into a pointwise formula.
    ip = np.sum(np.conj(psi) * dpsi, axis=1)
    dens = np.sum(np.abs(psi) ** 2, axis=1)
    psi_v = psi + 2j * zeta.imag * (dpsi - (ip / dens)[:, None] * psi)
    return psi, psi_v


def _add_double(u: GridField, zeta: complex, point: PhasePoint) -> GridField:
    psi, psi_v = _jet_pair(u, zeta, point)
    v1 = _single_dress(u.values, zeta, psi)
    v2 = _single_dress(v1, zeta, psi_v)
    return u.with_values(v2)


# ---------------------------------------------------------------------------
# soliton removal
# ---------------------------------------------------------------------------

def _undress(v_vals: np.ndarray, zs, phis: np.ndarray) -> np.ndarray:
    """Remove solitons given eigenfunction directions phis of shape (n,2,N).

    Removal is the same dressing formula fed with eigenfunctions instead of
    unbounded waves (each single inverse is B(v, zeta, M conj(psi)/|psi|^2)),
    so the correction enters with the same sign as in addition.
    """
    gram = gram_matrix(zs, phis)
    return v_vals + _gram_correction(gram, phis)


def remove_solitons(v: GridField, region) -> tuple[GridField, PhasePoint]:
    """Split v into a soliton-free background and the pure-soliton coordinates.

    Inverse of add_solitons: locates the spectrum in `region`, reads off the
    scattering polynomial beta, and undresses with the eigenfunctions.
    """
    report = locate_spectrum(v, region)
    if report.count == 0:
        raise EmptySpectrumError("no eigenvalues found in the region")
    mults = [m for _, m in report.roots]
    if any(m > 2 for m in mults) or (max(mults) == 2 and report.count != 2):
        raise DomainError("removal supports simple eigenvalues plus the "
                          "N=2 double-root case")
    data, beta = _extract_with_data(v, report)
    point = PhasePoint(report.spectrum, beta)

    if max(mults) == 2:
        zeta = report.roots[0][0]
        u1 = v.with_values(_single_dress(v.values, zeta, data[0].eigen_direction()))
        z1 = _refine_on(u1, zeta)
        rd1 = _RootData(u1, z1, with_jet=False)
        u_vals = _single_dress(u1.values, z1, rd1.eigen_direction())
        return v.with_values(u_vals), point

    zs = np.array([z for z, _ in report.roots])
    phis = np.stack([rd.eigen_direction() for rd in data], axis=2)
    return v.with_values(_undress(v.values, zs, phis)), point


def _refine_on(u: GridField, z0: complex) -> complex:
    from .scattering import _newton_refine
    pad = 0.2
    region = (z0.real - pad, z0.real + pad, max(z0.imag - pad, 0.02),
              z0.imag + pad)
    return _newton_refine(u, z0, region)


# ---------------------------------------------------------------------------
# wave propagation through the transform
# ---------------------------------------------------------------------------

def propagate_wave(u: GridField, point: PhasePoint, probe: WavePair) -> WavePair:
    """Image of a z-wave of u under the soliton addition at `point`.

    Purely algebraic once the dressing waves are known; the output is a
    z-wave for v = add_solitons(u, point), stored with the probe's own
    renormalization.
    """
    z = complex(probe.z)
    roots = point.roots()
    # the formula is regular at the roots themselves (a seed probe maps to
    # zero there); only the conjugate points are genuine poles
    if np.min(np.abs(z - np.conj(roots))) < 1e-8:
        raise SpectralError("probe parameter sits on a pole of the transform")

    pvals = np.stack([probe.comp1, probe.comp2], axis=1)
    clusters = cluster_roots(roots)
    if point.N == 2 and len(clusters) == 1 and clusters[0][1] == 2:
        zeta = clusters[0][0]
        psi, psi_v = _jet_pair(u, zeta, point)
        out = _apply_single(z, zeta, psi, pvals)
        out = _apply_single(z, zeta, psi_v, out)
    else:
        ws = wave_set_for(u, point)
        gram = gram_matrix(ws.z, ws.waves)
        ip = np.einsum("xck,xc->xk", np.conj(ws.waves), pvals)
        g = ip / (z - np.conj(ws.z))[None, :]
        w = np.linalg.solve(np.swapaxes(gram.entries, 1, 2), g[..., None])[..., 0]
        corr = np.einsum("xk,xck->xc", w, ws.waves)
        prefactor = np.prod(z - np.conj(ws.z))
        out = prefactor * (pvals - 1j * corr)
    return WavePair(u.grid, out[:, 0].copy(), out[:, 1].copy(),
                    probe.renorm, z)


def _apply_single(z: complex, zeta: complex, psi: np.ndarray,
                  vals: np.ndarray) -> np.ndarray:
    """(L(u) - conj(zeta) - 2i Im(zeta) P_psi) on a z-wave, pointwise form."""
    dens = np.sum(np.abs(psi) ** 2, axis=1)
    ip = np.sum(np.conj(psi) * vals, axis=1)
    return (z - np.conj(zeta)) * vals - 2j * zeta.imag * (
        ip / dens)[:, None] * psi
