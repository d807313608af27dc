"""Fourier multiplier symbols and a numerical admissibility checker.

A symbol ``m(xi)`` defines the operator ``L`` through ``F(Lf) = m F(f)``.
Three kinds are cataloged:

* ``whitham``    -- ``m(xi) = xi / tanh(xi)`` (full water-wave dispersion)
* ``boussinesq`` -- ``m(xi) = 1 + b xi**2``
* ``custom``     -- any even, pointwise numpy evaluator

Every evaluator is written in terms of ``|xi|`` so that evenness holds
bit-for-bit.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "SymbolSpec",
    "AdmissibilityReport",
    "whitham",
    "boussinesq",
    "custom",
    "eval_symbol",
    "eval_power",
    "check_admissibility",
    "symbol_from_config",
    "symbol_to_config",
]

# Below this |xi| the Whitham symbol is evaluated by its Taylor series; the
# first dropped term is ~xi**8/4725 < 1e-35.
_WHITHAM_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class SymbolSpec:
    """A dispersion symbol together with its growth orders.

    Parameters
    ----------
    kind : {"whitham", "boussinesq", "custom"}
    s : float
        High-frequency order, ``m(xi) - m(0) ~ |xi|**s`` for ``|xi| > 1``.
    s_prime : float
        Low-frequency order, ``m(xi) - m(0) <~ |xi|**s_prime`` for ``|xi| <= 1``.
    m0 : float
        Value at the origin.
    b : float, optional
        Boussinesq coefficient.
    evaluator : callable, optional
        Vectorised ``xi -> m(xi)`` for custom symbols.
    name : str
        Label used in reports and file names.
    """

    kind: str
    s: float
    s_prime: float
    m0: float = 1.0
    b: Optional[float] = None
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    name: str = ""
    expr: Optional[str] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("whitham", "boussinesq", "custom"):
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "boussinesq" and not (self.b is not None and self.b > 0):
            raise ValueError("boussinesq symbol needs b > 0")
        if self.kind == "custom" and self.evaluator is None:
            raise ValueError("custom symbol needs an evaluator")
        if not self.m0 > 0:
            raise ValueError("m(0) must be positive")
        if not self.name:
            label = {"whitham": "whitham", "custom": "custom"}.get(
                self.kind, f"boussinesq(b={self.b!r})"
            )
            object.__setattr__(self, "name", label)

    def __call__(self, xi):
        return eval_symbol(self, xi)

    @property
    def has_kdv_limit(self) -> bool:
        """True when ``m(xi) = 1 + xi**2/3 + O(xi**4)``, i.e. the KdV scaling applies."""
        if self.kind == "whitham":
            return True
        return self.kind == "boussinesq" and math.isclose(self.b, 1 / 3, rel_tol=1e-12)


def whitham() -> SymbolSpec:
    return SymbolSpec("whitham", s=1.0, s_prime=2.0, m0=1.0)


def boussinesq(b: float = 1 / 3) -> SymbolSpec:
    return SymbolSpec("boussinesq", s=2.0, s_prime=2.0, m0=1.0, b=float(b))


def custom(evaluator, s: float, s_prime: float, m0: Optional[float] = None,
           name: str = "custom", expr: Optional[str] = None) -> SymbolSpec:
    """Wrap a user evaluator.  ``m0`` defaults to ``evaluator(0)``."""
    if m0 is None:
        m0 = float(np.asarray(evaluator(np.zeros(1)), dtype=float)[0])
    return SymbolSpec("custom", s=float(s), s_prime=float(s_prime), m0=float(m0),
                      evaluator=evaluator, name=name, expr=expr)


def _whitham_abs(a: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    big = a >= _WHITHAM_SERIES_CUTOFF
    out[big] = a[big] / np.tanh(a[big])
    x2 = a[~big] ** 2
    out[~big] = 1.0 + x2 / 3 - x2**2 / 45 + 2 * x2**3 / 945
    return out


def eval_symbol(spec: SymbolSpec, xi):
    """Evaluate ``m(xi)``; scalars in give floats out.

    Raises
    ------
    ValueError
        If any frequency is not finite.
    """
    arr = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("symbol evaluated at non-finite frequency")
    a = np.abs(np.atleast_1d(arr))
    if spec.kind == "whitham":
        out = _whitham_abs(a)
    elif spec.kind == "boussinesq":
        out = 1.0 + spec.b * a * a
    else:
        out = np.asarray(spec.evaluator(a), dtype=float)
        out = np.broadcast_to(out, a.shape).astype(float)
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def eval_power(spec: SymbolSpec, xi, alpha: float):
    """``m(xi) ** alpha``, with ``sqrt`` used for the half powers."""
    if not math.isfinite(alpha):
        raise ValueError("exponent must be finite")
    m = eval_symbol(spec, xi)
    if alpha == 0:
        return np.ones_like(m) if np.ndim(m) else 1.0
    if alpha == 1:
        return m
    if alpha == 0.5:
        return np.sqrt(m)
    if alpha == -0.5:
        return 1.0 / np.sqrt(m)
    if alpha == -1:
        return 1.0 / m
    return np.power(m, alpha)


# ---------------------------------------------------------------------------
# admissibility
# ---------------------------------------------------------------------------

@dataclass
class AdmissibilityReport:
    even_ok: bool
    positivity_ok: bool
    low_freq_ok: bool
    low_freq_bound: float
    high_freq_ok: bool
    high_freq_bounds: tuple
    kernel_tail_ok: bool
    kernel_l2_tail: float
    kernel_l2_tail_small_eps: float
    kernel_lp_ok: bool
    kernel_lp_near_zero: float
    p_used: float
    eps: float
    s: float
    s_prime: float
    symbol: str
    verdict: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        lo, hi = d.pop("high_freq_bounds")
        d["high_freq_lower"] = lo
        d["high_freq_upper"] = hi
        return d


def _converging(values, rel_floor=1e-9) -> bool:
    """Successive refinements must shrink their increments."""
    v = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(v)):
        return False
    d1, d2 = abs(v[1] - v[0]), abs(v[2] - v[1])
    if d2 <= rel_floor * max(abs(v[2]), 1e-300):
        return True
    return d2 < d1


def _kernel_norms(spec, n, ell, eps_values, p):
    dx = 2 * ell / n
    xi = np.pi / ell * np.arange(n // 2 + 1)
    kern = np.fft.irfft(eval_power(spec, xi, -0.5), n) / dx
    x = dx * np.arange(n)
    x[n // 2:] -= 2 * ell
    ax = np.abs(x)
    tails = [math.sqrt(dx * float(np.sum(kern[ax >= e] ** 2))) for e in eps_values]
    lp = (dx * float(np.sum(np.abs(kern[ax < 1.0]) ** p))) ** (1 / p)
    return tails, lp


def check_admissibility(spec: SymbolSpec, eps: float = 0.1, n_kernel: int = 2**20,
                        l_kernel: float = 2.0**12, xi_max: float = 1e6,
                        n_samples: int = 4096, xi_min: float = 1e-3,
                        stability_rtol: float = 1e-3, eps_small: float = 0.01,
                        p: float = 4 / 3) -> AdmissibilityReport:
    """Numerically test the admissibility conditions for ``spec``.

    Constants are fitted on samples and a bound passes only if the fitted
    value is finite, positive and stable when the sample range is extended
    (``xi_min`` halved, ``xi_max`` doubled).  The kernel of ``L**-1/2`` is
    built by a discrete inverse transform on ``n_kernel`` points over
    ``[-l_kernel, l_kernel)``; its norms pass if they converge over the
    resolutions ``n/4, n/2, n``.

    ``p = 4/3`` lies in ``(1, 2) ∩ [2/(s+1), 2)`` for every ``s > 1/2``.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    xi = np.logspace(math.log10(xi_min), math.log10(xi_max), n_samples)
    m_pos = eval_symbol(spec, xi)
    m_neg = eval_symbol(spec, -xi)
    m0 = eval_symbol(spec, 0.0)
    even_ok = bool(np.array_equal(m_pos, m_neg)) and math.isclose(m0, spec.m0, rel_tol=1e-14)
    # strict growth away from the origin: m(xi) > m(0) > 0 for xi != 0
    positivity_ok = bool(np.all(m_pos - m0 > 0)) and m0 > 0

    def low_fit(lo):
        z = np.logspace(math.log10(lo), 0.0, n_samples)
        return float(np.max((eval_symbol(spec, z) - m0) / z**spec.s_prime))

    c_low = [low_fit(xi_min), low_fit(xi_min / 2)]
    low_ok = (positivity_ok and all(math.isfinite(c) and c > 0 for c in c_low)
              and abs(c_low[1] - c_low[0]) <= stability_rtol * c_low[0])

    def high_fit(hi):
        z = np.logspace(0.0, math.log10(hi), n_samples + 1)[1:]
        r = (eval_symbol(spec, z) - m0) / z**spec.s
        return float(np.min(r)), float(np.max(r))

    b1, b2 = high_fit(xi_max), high_fit(2 * xi_max)
    high_ok = (all(math.isfinite(c) and c > 0 for c in b1 + b2)
               and abs(b2[0] - b1[0]) <= stability_rtol * b1[0]
               and abs(b2[1] - b1[1]) <= stability_rtol * b1[1])

    levels = [_kernel_norms(spec, n_kernel // k, l_kernel, (eps, eps_small), p)
              for k in (4, 2, 1)]
    tails = np.array([lv[0] for lv in levels])
    lps = [lv[1] for lv in levels]
    tail_ok = _converging(tails[:, 0]) and _converging(tails[:, 1])
    lp_ok = _converging(lps)

    verdict = all([even_ok, positivity_ok, low_ok, high_ok, tail_ok, lp_ok])
    return AdmissibilityReport(
        even_ok=even_ok, positivity_ok=positivity_ok,
        low_freq_ok=bool(low_ok), low_freq_bound=c_low[-1],
        high_freq_ok=bool(high_ok), high_freq_bounds=b2,
        kernel_tail_ok=bool(tail_ok), kernel_l2_tail=float(tails[-1, 0]),
        kernel_l2_tail_small_eps=float(tails[-1, 1]),
        kernel_lp_ok=bool(lp_ok), kernel_lp_near_zero=float(lps[-1]),
        p_used=p, eps=eps, s=spec.s, s_prime=spec.s_prime, symbol=spec.name,
        verdict=bool(verdict),
    )


# ---------------------------------------------------------------------------
# config round trip
# ---------------------------------------------------------------------------

def _expr_evaluator(expr: str):
    code = compile(expr, "<symbol expr>", "eval")
    namespace = {"__builtins__": {}, "np": np, "pi": np.pi}

    def evaluator(xi):
        return eval(code, namespace, {"xi": xi})  # noqa: S307 - local config only

    return evaluator


def symbol_from_config(cfg) -> SymbolSpec:
    """Build a symbol from ``{"kind": ...}`` or the CLI shorthand ``"boussinesq:0.5"``.

    Custom symbols take ``{"kind": "custom", "expr": "<numpy expression in xi>",
    "s": ..., "s_prime": ...}``; the expression sees ``np``, ``pi`` and ``xi``
    (already ``|xi|``).
    """
    if isinstance(cfg, str):
        kind, _, arg = cfg.partition(":")
        kind = kind.strip().lower()
        if kind == "whitham":
            return whitham()
        if kind == "boussinesq":
            return boussinesq(float(arg) if arg else 1 / 3)
        raise ValueError(f"unknown symbol {cfg!r}")
    kind = str(cfg.get("kind", "")).lower()
    if kind == "whitham":
        return whitham()
    if kind == "boussinesq":
        if "b" not in cfg:
            raise ValueError("symbol.b is required for boussinesq")
        return boussinesq(float(cfg["b"]))
    if kind == "custom":
        if "expr" not in cfg:
            raise ValueError("symbol.expr is required for custom symbols")
        expr = str(cfg["expr"])
        ev = _expr_evaluator(expr)
        return custom(ev, s=float(cfg.get("s", 2.0)), s_prime=float(cfg.get("s_prime", 2.0)),
                      m0=cfg.get("m0"), name=cfg.get("name", "custom"), expr=expr)
    raise ValueError(f"symbol.kind must be whitham, boussinesq or custom, got {kind!r}")


def symbol_to_config(spec: SymbolSpec) -> dict:
    if spec.kind == "whitham":
        return {"kind": "whitham"}
    if spec.kind == "boussinesq":
        return {"kind": "boussinesq", "b": spec.b}
    out = {"kind": "custom", "s": spec.s, "s_prime": spec.s_prime, "m0": spec.m0,
           "name": spec.name}
    if spec.expr is not None:
        out["expr"] = spec.expr
    return out
