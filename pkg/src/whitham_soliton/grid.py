"""Periodic grids, spectral multipliers, quadrature and Sobolev norms.

The real line is replaced by ``[-l, l)`` sampled at ``n`` (even) points
``x_j = -l + j dx``.  Fourier modes are ``xi_k = pi k / l``.  Transforms use
the real FFT; the Nyquist mode is kept and multiplied like any other mode,
which is exact for the real even symbols used here.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .symbols import SymbolSpec, eval_power

__all__ = [
    "PeriodicGrid",
    "GridFunction",
    "apply_multiplier",
    "quadrature",
    "inner",
    "l2_norm",
    "sobolev_norm",
    "derivative",
    "circular_shift",
    "spectral_shift",
    "resample",
    "save_csv",
    "load_csv",
    "AliasingWarning",
]


class AliasingWarning(UserWarning):
    """Spectral truncation discarded a non-negligible part of a signal."""


@dataclass(frozen=True)
class PeriodicGrid:
    half_length: float
    n: int

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n > 0 and self.n % 2 == 0):
            raise ValueError(f"n must be a positive even integer, got {self.n!r}")
        if not (math.isfinite(self.half_length) and self.half_length > 0):
            raise ValueError("half_length must be positive and finite")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "half_length", float(self.half_length))

    @classmethod
    def for_level(cls, q: float, L0: float = 50.0, n: int = 4096) -> "PeriodicGrid":
        """Physical grid whose long-wave image has half-length ``L0``."""
        return cls(L0 * q ** (-1 / 3), n)

    @property
    def dx(self) -> float:
        return 2 * self.half_length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.half_length + self.dx * np.arange(self.n)
        x.flags.writeable = False
        return x

    @cached_property
    def xi(self) -> np.ndarray:
        """Frequencies of the real FFT, ``pi k / l`` for ``k = 0..n/2``."""
        xi = np.pi / self.half_length * np.arange(self.n // 2 + 1)
        xi.flags.writeable = False
        return xi

    @cached_property
    def xi_full(self) -> np.ndarray:
        """Frequencies in complex-FFT order, Nyquist at ``k = -n/2``."""
        xi = np.pi / self.half_length * np.fft.fftfreq(self.n, 1.0 / self.n)
        xi.flags.writeable = False
        return xi

    def to_dict(self) -> dict:
        return {"l": self.half_length, "n": self.n}

    @property
    def center_index(self) -> int:
        return self.n // 2

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.n))

    def sample(self, func) -> "GridFunction":
        return GridFunction(self, func(self.x))


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function has non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise ValueError("grid functions live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridFunction(self.grid, self.values / self._other(other))

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __pow__(self, p):
        return GridFunction(self.grid, self.values ** p)

    def __len__(self):
        return self.grid.n

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


# ---------------------------------------------------------------------------
# spectral machinery on raw arrays
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def multiplier_array(grid: PeriodicGrid, spec: SymbolSpec, alpha: float) -> np.ndarray:
    """``m(xi_k)**alpha`` on the real-FFT frequencies of ``grid`` (cached, read-only)."""
    arr = np.asarray(eval_power(spec, grid.xi, alpha), dtype=float)
    arr.flags.writeable = False
    return arr


def apply_array(values: np.ndarray, mult: np.ndarray) -> np.ndarray:
    return np.fft.irfft(mult * np.fft.rfft(values), values.shape[-1])


def apply_multiplier(f: GridFunction, spec: SymbolSpec, alpha: float) -> GridFunction:
    """Apply ``L**alpha``: mode ``k`` is scaled by ``m(xi_k)**alpha``."""
    return GridFunction(f.grid, apply_array(f.values, multiplier_array(f.grid, spec, alpha)))


def quadrature(f: GridFunction) -> float:
    """Rectangle rule ``dx * sum f_j`` (spectrally accurate for periodic data)."""
    return f.grid.dx * float(np.sum(f.values))


def inner(f: GridFunction, g: GridFunction) -> float:
    if f.grid != g.grid:
        raise ValueError("grid functions live on different grids")
    return f.grid.dx * float(np.dot(f.values, g.values))


def l2_norm(f: GridFunction) -> float:
    return math.sqrt(inner(f, f))


def _spectral_weights_sq(grid: PeriodicGrid) -> np.ndarray:
    # rfft stores modes k and -k once; count them twice except k=0 and Nyquist
    w = np.full(grid.n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    return w


def sobolev_norm(f: GridFunction, r: float) -> float:
    """``||f||_{H^r}`` with weight ``(1 + xi**2)**r``, normalised so that
    ``sobolev_norm(f, 0)**2 == quadrature(f**2)``."""
    if r < 0:
        raise ValueError("Sobolev index must be non-negative")
    grid = f.grid
    F = np.fft.rfft(f.values)
    w = _spectral_weights_sq(grid) * (1.0 + grid.xi**2) ** r
    return math.sqrt(grid.dx / grid.n * float(np.sum(w * np.abs(F) ** 2)))


def derivative(f: GridFunction, order: int = 1) -> GridFunction:
    """Spectral ``d^order/dx^order``; the Nyquist mode is dropped for odd orders."""
    grid = f.grid
    mult = (1j * grid.xi) ** order
    if order % 2:
        mult[-1] = 0.0
    return GridFunction(grid, np.fft.irfft(mult * np.fft.rfft(f.values), grid.n))


def circular_shift(f: GridFunction, j: int) -> GridFunction:
    """``f(x - j dx)`` on the periodic grid (exact)."""
    return GridFunction(f.grid, np.roll(f.values, int(j)))


def spectral_shift(f: GridFunction, x0: float) -> GridFunction:
    """Band-limited translate ``f(x - x0)``; the Nyquist mode is cosine-shifted."""
    grid = f.grid
    F = np.fft.rfft(f.values) * np.exp(-1j * grid.xi * x0)
    return GridFunction(grid, np.fft.irfft(F, grid.n))


def resample(f: GridFunction, target: PeriodicGrid, alias_tol: float = 1e-8) -> GridFunction:
    """Evaluate the trigonometric interpolant of ``f`` on ``target``.

    Same domain: zero-pad or truncate the spectrum.  Different domain: the
    interpolant (periodic with the source period) is summed at the target
    nodes directly.  A truncation that discards more than ``alias_tol`` of
    the spectral mass emits :class:`AliasingWarning`.
    """
    src = f.grid
    if target == src:
        return f
    F = np.fft.rfft(f.values)
    if target.half_length == src.half_length:
        n, m = src.n, target.n
        G = np.zeros(m // 2 + 1, dtype=complex)
        if m > n:
            G[: n // 2] = F[: n // 2]
            G[n // 2] = F[n // 2] / 2
        else:
            mass = float(np.sum(_spectral_weights_sq(src) * np.abs(F) ** 2))
            kept = F[: m // 2]
            lost = float(np.sum(_spectral_weights_sq(src)[m // 2:] * np.abs(F[m // 2:]) ** 2))
            if mass > 0 and lost > alias_tol * mass:
                warnings.warn(f"resample discards {lost / mass:.3e} of the spectral mass",
                              AliasingWarning, stacklevel=2)
            G[: m // 2] = kept
            G[m // 2] = 2 * F[m // 2].real
        return GridFunction(target, np.fft.irfft(G * (m / n), m))
    # general case: direct evaluation on the source period
    n = src.n
    c = F / n
    c[1: n // 2] *= 2
    k = np.arange(n // 2 + 1)
    phase = (target.x + src.half_length) * (np.pi / src.half_length)
    out = np.empty(target.n)
    step = 1024
    for i in range(0, target.n, step):
        th = np.outer(phase[i:i + step], k)
        out[i:i + step] = (np.cos(th) @ c.real) - (np.sin(th) @ c.imag)
    return GridFunction(target, out)


def save_csv(path, f: GridFunction, extra: dict | None = None) -> None:
    """Write columns ``x, value`` (plus optional named columns) at 17 digits."""
    cols = {"x": f.grid.x, "value": f.values}
    for name, col in (extra or {}).items():
        cols[name] = col.values if isinstance(col, GridFunction) else np.asarray(col)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(cols))
        for row in zip(*cols.values()):
            w.writerow([f"{v:.17g}" for v in row])


def load_csv(path, column: str = "value") -> GridFunction:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    x = np.array([float(r["x"]) for r in rows])
    vals = np.array([float(r[column]) for r in rows])
    return GridFunction(PeriodicGrid(-x[0], len(x)), vals)
