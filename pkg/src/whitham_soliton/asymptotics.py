"""KdV long-wave limit, physical variables and rate fits.

Long-wave scaling: ``S(f)(x) = q^{2/3} f(q^{1/3} x)``.  A grid of
half-length ``L0 q^{-1/3}`` is mapped by ``S^{-1}`` onto a grid of
half-length ``L0`` with the same nodes, so rescaling is a relabelling of
the samples and no interpolation is involved.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .grid import GridFunction, PeriodicGrid, apply_array, multiplier_array, sobolev_norm, \
    spectral_shift
from .symbols import SymbolSpec

__all__ = [
    "LAMBDA0",
    "I_KDV",
    "psi_kdv",
    "kdv_profile",
    "kdv_el_residual",
    "long_wave_scale",
    "rescale_to_kdv",
    "align_shift",
    "KdvComparison",
    "kdv_compare",
    "PhysicalWave",
    "recover_physical",
    "SteadyResidual",
    "steady_residual",
    "boussinesq_steady_residual",
    "LawFit",
    "InsufficientPointsError",
    "fit_multiplier_law",
    "fit_energy_law",
    "compare_physical_kdv",
    "size_ratios",
]

LAMBDA0 = 3 / 16 ** (1 / 3)
# E_KdV(psi_KdV) = -(4/5) lambda0^{5/2} / sqrt(3)
I_KDV = -(36 / 5) * 2 ** (-10 / 3)


def psi_kdv(x) -> np.ndarray:
    """``-lambda0 sech^2(sqrt(3 lambda0) x / 2)``, overflow-free for large ``|x|``."""
    z = 0.5 * math.sqrt(3 * LAMBDA0) * np.abs(np.asarray(x, dtype=float))
    e = np.exp(-2 * z)
    return -LAMBDA0 * 4 * e / (1 + e) ** 2


def kdv_profile(grid: PeriodicGrid) -> GridFunction:
    return GridFunction(grid, psi_kdv(grid.x))


def kdv_el_residual(psi: GridFunction, lambda0: float = LAMBDA0) -> float:
    """``||lambda0 psi + 3/2 psi^2 - psi_xx / 3||_2``."""
    grid = psi.grid
    pxx = np.fft.irfft(-(grid.xi**2) * np.fft.rfft(psi.values), grid.n)
    r = lambda0 * psi.values + 1.5 * psi.values**2 - pxx / 3
    return math.sqrt(grid.dx * float(np.dot(r, r)))


def long_wave_scale(psi: GridFunction, q: float) -> GridFunction:
    """``S(psi)``: KdV-frame data carried to constraint level ``q``."""
    grid = PeriodicGrid(psi.grid.half_length * q ** (-1 / 3), psi.grid.n)
    return GridFunction(grid, psi.values * q ** (2 / 3))


def rescale_to_kdv(u: GridFunction, q: float, L0: float | None = None) -> GridFunction:
    """``S^{-1}(u) = q^{-2/3} u(q^{-1/3} .)`` on the KdV-frame grid.

    Raises
    ------
    ValueError
        If ``L0`` is given and the grid half-length differs from
        ``L0 q^{-1/3}`` by more than 1e-12 relative.

    Notes
    -----
    With ``L0`` the KdV-frame grid is exactly ``(L0, n)``.  Values are
    divided by ``q^{2/3}``, which undoes :func:`long_wave_scale` to within
    one ulp; the round trip is bitwise only when ``q^{2/3}`` is a power of
    two, because rounding ``x q^{2/3}`` is not injective otherwise.
    """
    ell = u.grid.half_length
    if L0 is not None:
        if abs(ell - L0 * q ** (-1 / 3)) > 1e-12 * ell:
            raise ValueError(f"grid half-length {ell} does not match L0 q^(-1/3) = {L0 * q ** (-1 / 3)}")
        grid = PeriodicGrid(L0, u.grid.n)
    else:
        grid = PeriodicGrid(ell * q ** (1 / 3), u.grid.n)
    return GridFunction(grid, u.values / q ** (2 / 3))


# ---------------------------------------------------------------------------
# alignment
# ---------------------------------------------------------------------------

def align_shift(f: GridFunction, g: GridFunction, r: float = 1.0, newton_steps: int = 8):
    """Translate ``g`` to best match ``f`` in ``H^r``.

    Returns ``(x0, distance)`` minimising ``||f - g(. - x0)||_{H^r}``.  The
    spectral cross-correlation is evaluated on every grid shift, the best
    one is refined by a parabola through its neighbours and then polished
    by Newton steps on the exact trigonometric correlation.
    """
    if f.grid != g.grid:
        raise ValueError("grid functions live on different grids")
    grid = f.grid
    F = np.fft.fft(f.values)
    G = np.fft.fft(g.values)
    xi = grid.xi_full
    cross = (1 + xi**2) ** r * F * np.conj(G)
    if not np.any(np.abs(cross) > 0):
        return 0.0, sobolev_norm(f - g, r)
    corr = np.fft.ifft(cross).real
    j = int(np.argmax(corr))
    cm, c0, cp = corr[j - 1], corr[j], corr[(j + 1) % grid.n]
    denom = cm - 2 * c0 + cp
    frac = 0.5 * (cm - cp) / denom if denom < 0 else 0.0
    x0 = (j + frac) * grid.dx
    for _ in range(newton_steps):
        ph = np.exp(1j * xi * x0)
        d1 = float(np.sum((1j * xi) * cross * ph).real)
        d2 = float(np.sum(-(xi**2) * cross * ph).real)
        if d2 >= 0:
            break
        step = -d1 / d2
        x0 += step
        if abs(step) < 1e-15 * grid.half_length:
            break
    L = 2 * grid.half_length
    x0 = (x0 + grid.half_length) % L - grid.half_length
    dist = sobolev_norm(f - spectral_shift(g, x0), r)
    return float(x0), float(dist)


@dataclass(frozen=True)
class KdvComparison:
    q: float
    h1_distance: float
    shift: float
    ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def kdv_compare(result) -> KdvComparison:
    """H1 distance between ``S^{-1}(u)`` and the best translate of ``psi_KdV``."""
    q = result.q
    psi = rescale_to_kdv(result.u, q, getattr(result.config, "L0", None))
    x0, dist = align_shift(psi, kdv_profile(psi.grid), r=1.0)
    return KdvComparison(q=q, h1_distance=dist, shift=x0, ratio=dist / q ** (1 / 6))


# ---------------------------------------------------------------------------
# physical variables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhysicalWave:
    eta: GridFunction
    v: GridFunction
    speed_c: float


def recover_physical(result, spec: SymbolSpec | None = None, lam: float | None = None) -> PhysicalWave:
    """Surface elevation and velocity from a minimiser.

    ``eta = -c^2 ((K^{-1/2}u)^2/2 + K^{1/2}u)``, ``v = c K^{-1/2}u`` with
    ``c = (-lambda)^{-1/2}``.  ``result`` may be a minimiser result or a
    bare grid function (then ``spec`` and ``lam`` are required).
    """
    if isinstance(result, GridFunction):
        u = result
        if spec is None or lam is None:
            raise ValueError("spec and lam are required with a bare grid function")
    else:
        u = result.u
        spec = spec or result.symbol
        lam = result.lam if lam is None else lam
    if not lam < 0:
        raise ValueError(f"wave speed undefined for lambda = {lam}")
    c = (-lam) ** -0.5
    grid = u.grid
    U = np.fft.rfft(u.values)
    half = np.fft.irfft(multiplier_array(grid, spec, 0.5) * U, grid.n)
    w = np.fft.irfft(multiplier_array(grid, spec, -0.5) * U, grid.n)
    eta = -c * c * (0.5 * w * w + half)
    return PhysicalWave(eta=GridFunction(grid, eta), v=GridFunction(grid, c * w), speed_c=c)


class SteadyResidual(NamedTuple):
    r1: float
    r2: float
    flagged: bool  # True when a zero denominator forced absolute residuals


def _l2(grid, a):
    return math.sqrt(grid.dx * float(np.dot(a, a)))


def steady_residual(w: PhysicalWave, spec: SymbolSpec) -> SteadyResidual:
    """Normalised residuals of ``Kv + eta v + c K eta = 0`` and
    ``eta + v^2/2 + c K v = 0``."""
    grid = w.eta.grid
    K = multiplier_array(grid, spec, 1.0)
    eta, v, c = w.eta.values, w.v.values, w.speed_c
    e1 = apply_array(v, K) + eta * v + c * apply_array(eta, K)
    e2 = eta + 0.5 * v * v + c * apply_array(v, K)
    nv, ne = _l2(grid, v), _l2(grid, eta)
    flagged = nv == 0 or ne == 0
    r1 = _l2(grid, e1) / nv if nv else _l2(grid, e1)
    r2 = _l2(grid, e2) / ne if ne else _l2(grid, e2)
    return SteadyResidual(r1, r2, flagged)


def boussinesq_steady_residual(w: PhysicalWave, a: float, b: float, c: float, d: float):
    """Residuals of the travelling ``(a, b, c, d)`` Boussinesq system.

    With ``eta(x + c_s t)``, ``v(x + c_s t)`` the system reads

        c_s eta' + v' + (eta v)' + a v''' - b c_s eta''' = 0
        c_s v' + eta' + v v' + c eta''' - d c_s v''' = 0

    Derivatives are spectral; each residual is normalised by the L2 norm
    of ``v'`` and ``eta'`` respectively.
    """
    grid = w.eta.grid
    cs = w.speed_c
    ik = 1j * grid.xi

    def dn(f, k):
        mult = ik**k
        if k % 2:
            mult = mult.copy()
            mult[-1] = 0.0
        return np.fft.irfft(mult * np.fft.rfft(f), grid.n)

    eta, v = w.eta.values, w.v.values
    e1 = cs * dn(eta, 1) + dn(v, 1) + dn(eta * v, 1) + a * dn(v, 3) - b * cs * dn(eta, 3)
    e2 = cs * dn(v, 1) + dn(eta, 1) + dn(0.5 * v * v, 1) + c * dn(eta, 3) - d * cs * dn(v, 3)
    nv, ne = _l2(grid, dn(v, 1)), _l2(grid, dn(eta, 1))
    flagged = nv == 0 or ne == 0
    r1 = _l2(grid, e1) / nv if nv else _l2(grid, e1)
    r2 = _l2(grid, e2) / ne if ne else _l2(grid, e2)
    return SteadyResidual(r1, r2, flagged)


def compare_physical_kdv(w: PhysicalWave, q: float, L0: float | None = None):
    """KdV-frame distances of the physical fields.

    ``eta`` is compared with ``-psi_KdV`` in ``H^{1/2}`` and ``v`` with
    ``+psi_KdV`` in ``H^{3/2}``, each at its own optimal translation.
    Returns ``(dist_eta, dist_v)``.
    """
    eta = rescale_to_kdv(w.eta, q, L0)
    v = rescale_to_kdv(w.v, q, L0)
    psi = kdv_profile(eta.grid)
    _, d_eta = align_shift(eta, -psi, r=0.5)
    _, d_v = align_shift(v, psi, r=1.5)
    return d_eta, d_v


# ---------------------------------------------------------------------------
# fits and size ratios
# ---------------------------------------------------------------------------

class InsufficientPointsError(ValueError):
    pass


class LawFit(NamedTuple):
    slope: float
    residual: float  # RMS misfit relative to RMS data


def _through_origin(x, y) -> LawFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope = float(np.dot(x, y) / np.dot(x, x))
    resid = float(np.sqrt(np.mean((y - slope * x) ** 2)) / np.sqrt(np.mean(y**2)))
    return LawFit(slope, resid)


def _usable(records: Sequence, min_points: int = 4, min_decades: float = 1.5):
    good = [r for r in records if r.converged and math.isfinite(r.lam)]
    if len(good) < min_points:
        raise InsufficientPointsError(f"need at least {min_points} converged points, got {len(good)}")
    qs = np.array([r.q for r in good])
    if math.log10(qs.max() / qs.min()) < min_decades - 1e-12:
        raise InsufficientPointsError(f"points must span at least {min_decades} decades in q")
    return good, qs


def fit_multiplier_law(records: Sequence) -> LawFit:
    """Slope of ``lambda + 1`` against ``q^{2/3}`` (forced through the origin)."""
    good, qs = _usable(records)
    return _through_origin(qs ** (2 / 3), [r.lam + 1 for r in good])


def fit_energy_law(records: Sequence) -> LawFit:
    """Slope of ``I_q - q`` against ``q^{5/3}`` (forced through the origin)."""
    good, qs = _usable(records)
    return _through_origin(qs ** (5 / 3), [r.I_q - r.q for r in good])


def size_ratios(u: GridFunction, q: float, spec: SymbolSpec) -> dict:
    """Scale-free size measures of a minimiser.

    ``sup``: ``||u||_inf / q^{2/3}``; ``dx``: ``||u_x||^2 / q^{5/3}``;
    ``dxx``: ``||u_xx||^2 / q^{7/3}``; ``hs``: ``||u||^2_{H^{s/2}} / q``.
    """
    grid = u.grid
    U = np.fft.rfft(u.values)
    w = np.full(grid.n // 2 + 1, 2.0)
    w[0] = w[-1] = 1.0
    P = w * np.abs(U) ** 2 * grid.dx / grid.n
    ux2 = float(np.sum(P[:-1] * grid.xi[:-1] ** 2))
    uxx2 = float(np.sum(P * grid.xi**4))
    hs = sobolev_norm(u, spec.s / 2) ** 2
    return {
        "sup": u.sup_norm() / q ** (2 / 3),
        "dx": ux2 / q ** (5 / 3),
        "dxx": uxx2 / q ** (7 / 3),
        "hs": hs / q,
    }
