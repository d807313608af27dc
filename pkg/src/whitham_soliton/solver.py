"""Constrained minimisation of the energy on the sphere ``Q(u) = q``.

The iteration is a projected (Riemannian) gradient descent:

    u <- retract(u + tau * d),    retract(v) = v * sqrt(q / Q(v))

with ``d`` the negative gradient projected onto the tangent space of the
sphere and Armijo backtracking on ``tau``.  By default the gradient is
preconditioned by ``(L - m(0) + mu)^{-1}``, ``mu = lambda_0 q^{2/3}``, which
is the linear part of the constrained Hessian in the long-wave regime; the
projection is then taken in the matching metric so ``d`` stays tangent.

Sufficient decrease is measured on ``E + lambda Q`` rather than on ``E``.
The two agree on the sphere, but the former is insensitive to the
O(1e-16 q) radial jitter left by the retraction, which otherwise swamps the
energy decrease once the tangential gradient drops below ~1e-8 sqrt(q).
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np

from . import asymptotics
from .functionals import (
    FunctionalBreakdown,
    _grad_array,
    _Ops,
    compute_breakdown,
    energy,
    energy_difference,
)
from .grid import GridFunction, PeriodicGrid, apply_array
from .symbols import SymbolSpec

__all__ = [
    "ConfigError",
    "SolverConfig",
    "MinimizerResult",
    "SweepRecord",
    "initial_guess",
    "project_tangent",
    "minimize_constrained",
    "lagrange_multiplier",
    "el_residual",
    "sweep",
    "multistart_check",
]

log = logging.getLogger(__name__)

Q_MAX = 0.1


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one constrained solve.

    ``grad_tol`` bounds the L2 norm of the tangential gradient relative to
    ``sqrt(q)``.  ``L0`` and ``n`` fix the grid: half-length
    ``L0 * q**(-1/3)`` with ``n`` points.
    """

    q: float = 1e-3
    L0: float = 50.0
    n: int = 4096
    max_iters: int = 50_000
    grad_tol: float = 1e-9
    armijo_c: float = 1e-4
    step_init: float = 1.0
    step_shrink: float = 0.5
    preconditioned: bool = True
    recenter_every: int = 100

    def validate(self) -> "SolverConfig":
        if not (isinstance(self.q, (int, float)) and math.isfinite(self.q) and 0 < self.q <= Q_MAX):
            raise ConfigError("q", f"must lie in (0, {Q_MAX}], got {self.q!r}")
        if not self.L0 > 0:
            raise ConfigError("L0", "must be positive")
        if not (int(self.n) == self.n and self.n >= 8 and self.n % 2 == 0):
            raise ConfigError("n", "must be an even integer >= 8")
        if not (int(self.max_iters) == self.max_iters and self.max_iters >= 1):
            raise ConfigError("max_iters", "must be a positive integer")
        for name in ("grad_tol", "armijo_c", "step_init"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        if not 0 < self.step_shrink < 1:
            raise ConfigError("step_shrink", "must lie in (0, 1)")
        if not self.recenter_every >= 0:
            raise ConfigError("recenter_every", "must be non-negative")
        return self

    @property
    def grid(self) -> PeriodicGrid:
        return PeriodicGrid.for_level(self.q, self.L0, int(self.n))

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown solver option")
        kw = {}
        for f in fields(cls):
            if f.name in d:
                val = d[f.name]
                try:
                    if f.type in ("int",):
                        if isinstance(val, float) and not val.is_integer():
                            raise ValueError
                        val = int(val)
                    elif f.type in ("float",):
                        val = float(val)
                    elif f.type in ("bool",) and not isinstance(val, bool):
                        raise TypeError
                except (TypeError, ValueError):
                    raise ConfigError(f.name, f"cannot interpret {val!r}") from None
                kw[f.name] = val
        return cls(**kw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MinimizerResult:
    u: GridFunction
    q: float
    lam: float
    speed_c: float
    energy: float
    breakdown: FunctionalBreakdown
    el_residual: float
    grad_norm: float
    iters: int
    converged: bool
    message: str
    symbol: SymbolSpec
    config: SolverConfig
    history: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self) -> PeriodicGrid:
        return self.u.grid

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "lambda": self.lam,
            "speed_c": self.speed_c,
            "energy": self.energy,
            "breakdown": self.breakdown.to_dict(),
            "el_residual": self.el_residual,
            "grad_norm": self.grad_norm,
            "iters": self.iters,
            "converged": self.converged,
            "message": self.message,
            "symbol": self.symbol.name,
            "grid": self.grid.to_dict(),
            "config": self.config.to_dict(),
        }


def _renormalize(v: np.ndarray, q: float, dx: float) -> np.ndarray:
    return v * math.sqrt(q / (0.5 * dx * float(np.dot(v, v))))


def initial_guess(q: float, grid: PeriodicGrid) -> GridFunction:
    """Long-wave scaled KdV profile ``q^{2/3} psi_KdV(q^{1/3} x)``, normalised to ``Q = q``."""
    vals = q ** (2 / 3) * asymptotics.psi_kdv(q ** (1 / 3) * grid.x)
    return GridFunction(grid, _renormalize(vals, q, grid.dx))


def project_tangent(g: GridFunction, u: GridFunction) -> GridFunction:
    """L2-orthogonal projection of ``g`` onto the tangent space at ``u``."""
    uu = float(np.dot(u.values, u.values))
    if uu == 0:
        raise ValueError("tangent space undefined at u = 0")
    return GridFunction(u.grid, g.values - (float(np.dot(g.values, u.values)) / uu) * u.values)


def lagrange_multiplier(u: GridFunction, spec: SymbolSpec) -> float:
    """``lambda = -<dE(u), u> / (2 Q(u))``."""
    ops = _Ops(u.grid, spec)
    g = _grad_array(ops, u.values)
    return -float(np.dot(g, u.values)) / float(np.dot(u.values, u.values))


def el_residual(u: GridFunction, lam: float, spec: SymbolSpec) -> float:
    """``||lam u + dE(u)|| / ||u||`` (0 for ``u = 0``)."""
    nu = float(np.linalg.norm(u.values))
    if nu == 0:
        return 0.0
    g = _grad_array(_Ops(u.grid, spec), u.values)
    return float(np.linalg.norm(lam * u.values + g)) / nu


def _recenter(v: np.ndarray, center: int) -> np.ndarray:
    j = int(np.argmin(v))
    return np.roll(v, center - j) if j != center else v


def minimize_constrained(cfg: SolverConfig, spec: SymbolSpec,
                         u0: Optional[GridFunction] = None,
                         keep_history: bool = True) -> MinimizerResult:
    """Minimise ``E`` over ``{Q = cfg.q}`` on the grid described by ``cfg``.

    Non-convergence (iteration cap or step underflow below 1e-16) is
    reported through ``converged=False``, never raised.
    """
    cfg.validate()
    q = float(cfg.q)
    grid = cfg.grid
    dx = grid.dx
    n = grid.n
    if u0 is None:
        u = initial_guess(q, grid).values
    else:
        if u0.grid != grid:
            raise ValueError("starting guess lives on a different grid")
        u = _renormalize(u0.values, q, dx)

    ops = _Ops(grid, spec)
    if cfg.preconditioned:
        mu = asymptotics.LAMBDA0 * q ** (2 / 3) * spec.m0
        prec = 1.0 / (np.asarray(ops.full) - spec.m0 + mu)
    else:
        prec = None

    hist = {"energy": [], "grad_norm": [], "step": [], "slope": []}
    sq = math.sqrt(q)
    e_cur = energy(GridFunction(grid, u), spec)
    converged = False
    message = "iteration limit reached"
    it = 0
    gnorm = math.inf
    for it in range(int(cfg.max_iters) + 1):
        if cfg.recenter_every and it and it % cfg.recenter_every == 0:
            u = _recenter(u, grid.center_index)
        g = _grad_array(ops, u)
        uu = float(np.dot(u, u))
        lam = -float(np.dot(g, u)) / uu
        gt = g + lam * u
        gnorm = math.sqrt(dx * float(np.dot(gt, gt))) / sq
        if keep_history:
            hist["energy"].append(e_cur)
            hist["grad_norm"].append(gnorm)
        if gnorm <= cfg.grad_tol:
            converged = True
            message = "converged"
            break
        if it == cfg.max_iters:
            break
        if prec is None:
            d = -gt
        else:
            pg = apply_array(g, prec)
            pu = apply_array(u, prec)
            d = -(pg - (float(np.dot(pg, u)) / float(np.dot(pu, u))) * pu)
        slope = dx * float(np.dot(gt, d))
        if not slope < 0:
            message = "no descent direction"
            break
        tau = cfg.step_init
        u_old = GridFunction(grid, u)
        while True:
            trial = _renormalize(u + tau * d, q, dx)
            dq = 0.5 * dx * float(np.dot(trial - u, trial + u))
            de = energy_difference(u_old, GridFunction(grid, trial), spec)
            if de + lam * dq <= cfg.armijo_c * tau * slope:
                break
            tau *= cfg.step_shrink
            if tau < 1e-16:
                break
        if tau < 1e-16:
            message = "line search failed"
            break
        u = trial
        e_cur = e_cur + de
        if keep_history:
            hist["step"].append(tau)
            hist["slope"].append(slope)

    uf = GridFunction(grid, u)
    lam = lagrange_multiplier(uf, spec)
    speed = (-lam) ** -0.5 if lam < 0 else math.nan
    br = compute_breakdown(uf, spec)
    res = el_residual(uf, lam, spec)
    log.debug("q=%g %s after %d iterations, residual %.3e", q, message, it, res)
    return MinimizerResult(
        u=uf, q=q, lam=lam, speed_c=speed, energy=energy(uf, spec), breakdown=br,
        el_residual=res, grad_norm=gnorm, iters=it, converged=converged, message=message,
        symbol=spec, config=cfg, history=hist if keep_history else {},
    )


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepRecord:
    q: float
    I_q: float
    lam: float
    speed_c: float
    el_residual: float
    h1_kdv_distance: float
    ratio_q16: float
    sup_norm_ratio: float
    converged: bool
    message: str = ""
    result: Optional[MinimizerResult] = field(default=None, repr=False, compare=False)

    CSV_FIELDS = ("q", "I_q", "lambda", "speed_c", "el_residual", "h1_kdv_distance",
                  "ratio_q16", "sup_norm_ratio", "converged")

    def to_row(self) -> dict:
        return {
            "q": self.q, "I_q": self.I_q, "lambda": self.lam, "speed_c": self.speed_c,
            "el_residual": self.el_residual, "h1_kdv_distance": self.h1_kdv_distance,
            "ratio_q16": self.ratio_q16, "sup_norm_ratio": self.sup_norm_ratio,
            "converged": self.converged,
        }


def _record(res: MinimizerResult) -> SweepRecord:
    q = res.q
    h1 = ratio = math.nan
    if res.converged and res.symbol.has_kdv_limit:
        cmp = asymptotics.kdv_compare(res)
        h1, ratio = cmp.h1_distance, cmp.ratio
    return SweepRecord(
        q=q, I_q=res.energy, lam=res.lam, speed_c=res.speed_c, el_residual=res.el_residual,
        h1_kdv_distance=h1, ratio_q16=ratio,
        sup_norm_ratio=res.u.sup_norm() / q ** (2 / 3),
        converged=res.converged, message=res.message, result=res,
    )


def _failed(q: float, exc: Exception) -> SweepRecord:
    nan = math.nan
    return SweepRecord(q=q, I_q=nan, lam=nan, speed_c=nan, el_residual=nan,
                       h1_kdv_distance=nan, ratio_q16=nan, sup_norm_ratio=nan,
                       converged=False, message=f"error: {exc}")


def sweep(q_values: Sequence[float], spec: SymbolSpec, base_cfg: SolverConfig,
          warm_start: bool = True, jobs: int = 1) -> list:
    """Solve at every ``q`` and reduce each result to a :class:`SweepRecord`.

    With ``warm_start`` (the default) the ``q`` values must be descending and
    each solve starts from the previous minimiser carried to the new level
    by the long-wave scaling; the points then run sequentially.  Otherwise
    every point starts from the KdV profile and ``jobs > 1`` solves points
    concurrently.  Failed points are kept with ``converged=False``.
    """
    qs = [float(q) for q in q_values]
    if warm_start and any(b > a for a, b in zip(qs, qs[1:])):
        raise ValueError("q_values must be sorted in descending order for warm starts")

    def solve_one(q, u0=None):
        try:
            return _record(minimize_constrained(replace(base_cfg, q=q), spec, u0=u0,
                                                keep_history=False))
        except (ValueError, FloatingPointError) as exc:
            return _failed(q, exc)

    if not warm_start:
        if jobs > 1 and len(qs) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                return list(pool.map(solve_one, qs))
        return [solve_one(q) for q in qs]

    records = []
    prev = None
    for q in qs:
        u0 = None
        if prev is not None and prev.converged:
            grid = replace(base_cfg, q=q).grid
            u0 = GridFunction(grid, prev.u.values * (q / prev.q) ** (2 / 3))
        rec = solve_one(q, u0)
        records.append(rec)
        prev = rec.result
    return records


def multistart_check(result: MinimizerResult, seed: int = 0, n_starts: int = 2,
                     amplitude: float = 0.3) -> dict:
    """Re-solve from perturbed starts and flag ``result`` if any restart ends lower.

    A point is flagged when its energy exceeds the best restart by more
    than ``1e-10 q``.  Perturbations are smooth (low-mode) and seeded.
    """
    rng = np.random.default_rng(seed)
    cfg, spec, q = result.config, result.symbol, result.q
    grid = result.grid
    z = q ** (1 / 3) * grid.x
    energies = []
    for _ in range(n_starts):
        stretch = 1 + amplitude * rng.uniform(-1, 1)
        shift = rng.uniform(-5, 5)
        modes = rng.normal(size=6) * amplitude
        bump = sum(c * np.cos((k + 1) * 0.2 * (z - shift)) for k, c in enumerate(modes))
        vals = asymptotics.psi_kdv((z - shift) / stretch) * (1 + bump * np.exp(-((z - shift) / 8) ** 2))
        res = minimize_constrained(cfg, spec, u0=GridFunction(grid, vals), keep_history=False)
        energies.append(res.energy if res.converged else math.nan)
    finite = [e for e in energies if math.isfinite(e)]
    best = min(finite) if finite else math.nan
    flagged = bool(finite) and result.energy > best + 1e-10 * q
    return {"flagged": flagged, "energy": result.energy, "restart_energies": energies}
