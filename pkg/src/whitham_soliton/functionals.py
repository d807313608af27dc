"""Discrete energy functionals.

All functionals are defined directly on the collocation grid: products are
pointwise and integrals are rectangle sums.  With that choice ``grad_E`` is
the exact gradient of the discrete ``E`` and finite differences of
``energy`` agree with it to round-off.

Notation: ``w = L^{-1/2} u`` and ``A = L^{1/2} u + w**2 / 2``, so that
``E(u) = (1/2) int A**2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .grid import GridFunction, PeriodicGrid, apply_array, multiplier_array, resample
from .symbols import SymbolSpec

__all__ = [
    "FunctionalBreakdown",
    "NcDecomposition",
    "compute_Q",
    "compute_breakdown",
    "energy",
    "energy_difference",
    "grad_E",
    "decompose_Nc",
    "compute_E_kdv",
    "compute_E_rem",
    "E_rem_terms",
    "breakdown_padded",
]


@dataclass(frozen=True)
class FunctionalBreakdown:
    Q: float
    Lpart: float
    Nc: float
    Nr: float
    E: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NcDecomposition:
    cubic: float
    n1c: float
    n2c: float
    n3c: float

    @property
    def total(self) -> float:
        return self.cubic + self.n1c + self.n2c + self.n3c

    def to_dict(self) -> dict:
        return asdict(self)


class _Ops:
    """Cached multiplier arrays for one (grid, symbol) pair."""

    __slots__ = ("grid", "half", "mhalf", "full")

    def __init__(self, grid: PeriodicGrid, spec: SymbolSpec):
        self.grid = grid
        self.half = multiplier_array(grid, spec, 0.5)
        self.mhalf = multiplier_array(grid, spec, -0.5)
        self.full = multiplier_array(grid, spec, 1.0)

    def parts(self, u: np.ndarray):
        """Return ``(L^{1/2} u, L^{-1/2} u)`` via one forward transform."""
        U = np.fft.rfft(u)
        n = self.grid.n
        return np.fft.irfft(self.half * U, n), np.fft.irfft(self.mhalf * U, n)


def compute_Q(u: GridFunction) -> float:
    return 0.5 * u.grid.dx * float(np.dot(u.values, u.values))


def compute_breakdown(u: GridFunction, spec: SymbolSpec) -> FunctionalBreakdown:
    ops = _Ops(u.grid, spec)
    dx = u.grid.dx
    v = u.values
    h, w = ops.parts(v)
    w2 = w * w
    Q = 0.5 * dx * float(np.dot(v, v))
    Lpart = 0.5 * dx * float(np.dot(h, h))
    Nc = 0.5 * dx * float(np.dot(h, w2))
    Nr = 0.125 * dx * float(np.dot(w2, w2))
    return FunctionalBreakdown(Q=Q, Lpart=Lpart, Nc=Nc, Nr=Nr, E=Lpart + Nc + Nr)


def energy(u: GridFunction, spec: SymbolSpec) -> float:
    """Square form ``(1/2) int (L^{1/2}u + (L^{-1/2}u)^2/2)^2``; never negative."""
    h, w = _Ops(u.grid, spec).parts(u.values)
    a = h + 0.5 * w * w
    return 0.5 * u.grid.dx * float(np.dot(a, a))


def energy_difference(u: GridFunction, v: GridFunction, spec: SymbolSpec) -> float:
    """``E(v) - E(u)`` computed from the difference ``v - u`` without cancellation."""
    ops = _Ops(u.grid, spec)
    hu, wu = ops.parts(u.values)
    hv, wv = ops.parts(v.values)
    hd, wd = ops.parts(v.values - u.values)
    da = hd + 0.5 * wd * (wu + wv)
    sa = hu + hv + 0.5 * (wu * wu + wv * wv)
    return 0.5 * u.grid.dx * float(np.dot(da, sa))


def _grad_array(ops: _Ops, v: np.ndarray) -> np.ndarray:
    h, w = ops.parts(v)
    a = h + 0.5 * w * w
    n = ops.grid.n
    return np.fft.irfft(ops.half * np.fft.rfft(a) + ops.mhalf * np.fft.rfft(a * w), n)


def grad_E(u: GridFunction, spec: SymbolSpec) -> GridFunction:
    """Gradient of the discrete energy in function scaling.

    Equals ``Lu + L^{-1/2}(w^3/2) + L^{-1/2}(L^{1/2}u w) + L^{1/2}(w^2/2)``
    and satisfies ``E(u + h) - E(u) = dx * sum(grad * h) + O(|h|^2)``.
    """
    return GridFunction(u.grid, _grad_array(_Ops(u.grid, spec), u.values))


def decompose_Nc(u: GridFunction, spec: SymbolSpec) -> NcDecomposition:
    """Split ``Nc`` into the local cubic term and three commutator-type remainders."""
    grid = u.grid
    dx = grid.dx
    v = u.values
    m0 = spec.m0
    rt = math.sqrt(m0)
    U = np.fft.rfft(v)
    dminus = np.fft.irfft((multiplier_array(grid, spec, -0.5) - 1 / rt) * U, grid.n)
    dplus = np.fft.irfft((multiplier_array(grid, spec, 0.5) - rt) * U, grid.n)
    w = np.fft.irfft(multiplier_array(grid, spec, -0.5) * U, grid.n)
    cubic = dx * float(np.sum(v**3)) / (2 * rt)
    n1c = 0.5 * rt * dx * float(np.dot(v, dminus * dminus))
    n2c = dx * float(np.dot(v * v, dminus))
    n3c = 0.5 * dx * float(np.dot(w * w, dplus))
    return NcDecomposition(cubic=cubic, n1c=n1c, n2c=n2c, n3c=n3c)


def compute_E_kdv(psi: GridFunction) -> float:
    """``(1/2) int (psi_x^2 / 3 + psi^3)`` with a spectral derivative."""
    grid = psi.grid
    P = np.fft.rfft(psi.values)
    dP = 1j * grid.xi * P
    dP[-1] = 0.0
    psi_x = np.fft.irfft(dP, grid.n)
    return 0.5 * grid.dx * (float(np.dot(psi_x, psi_x)) / 3 + float(np.sum(psi.values**3)))


def _check_kdv_expansion(spec: SymbolSpec):
    if not spec.has_kdv_limit:
        warnings.warn(
            f"symbol {spec.name} does not expand as 1 + xi^2/3 near 0; "
            "E_rem is not small in the long-wave regime",
            RuntimeWarning, stacklevel=3,
        )


def compute_E_rem(u: GridFunction, spec: SymbolSpec) -> float:
    """``E(u) - Q(u) - E_KdV(u)`` (by subtraction)."""
    _check_kdv_expansion(spec)
    return energy(u, spec) - compute_Q(u) - compute_E_kdv(u)


def E_rem_terms(u: GridFunction, spec: SymbolSpec) -> dict:
    """Explicit remainder pieces; their sum cross-checks :func:`compute_E_rem`.

    ``dispersion`` is ``(1/2) sum (m - 1 - xi^2/3) |u_k|^2``; the others are
    the ``Nc`` remainders and ``Nr``.  Assumes ``m(0) = 1``.
    """
    _check_kdv_expansion(spec)
    grid = u.grid
    U = np.fft.rfft(u.values)
    w = np.full(grid.n // 2 + 1, 2.0)
    w[0] = w[-1] = 1.0
    mult = multiplier_array(grid, spec, 1.0) - 1.0 - grid.xi**2 / 3
    dispersion = 0.5 * grid.dx / grid.n * float(np.sum(w * mult * np.abs(U) ** 2))
    dec = decompose_Nc(u, spec)
    nr = compute_breakdown(u, spec).Nr
    terms = {"dispersion": dispersion, "n1c": dec.n1c, "n2c": dec.n2c, "n3c": dec.n3c, "nr": nr}
    terms["total"] = sum(terms.values())
    return terms


def breakdown_padded(u: GridFunction, spec: SymbolSpec, factor: int = 2) -> FunctionalBreakdown:
    """Diagnostic: functionals evaluated on a ``factor``-times finer grid (dealiased)."""
    fine = PeriodicGrid(u.grid.half_length, u.grid.n * factor)
    return compute_breakdown(resample(u, fine), spec)
