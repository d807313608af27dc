"""Acceptance suite: twelve criteria at their stated tolerances.

Each test is one criterion; the conftest hook prints a PASS/FAIL line per
criterion at the end of the run.  The sweeps are solved once per module.
"""
import itertools
from dataclasses import replace

import numpy as np
import pytest

from whitham_soliton import asymptotics as asy
from whitham_soliton import boussinesq, whitham
from whitham_soliton.functionals import (
    compute_breakdown, compute_E_kdv, compute_Q, decompose_Nc, energy, grad_E,
)
from whitham_soliton.grid import (
    GridFunction, PeriodicGrid, apply_multiplier, circular_shift, inner, l2_norm, quadrature,
)
from whitham_soliton.solver import SolverConfig, lagrange_multiplier, minimize_constrained, sweep
from whitham_soliton.symbols import check_admissibility, custom, eval_power

from conftest import smooth_random

LADDER = [float(q) for q in np.logspace(-2, -4, 9)]
STABLE = 0.10          # relative change allowed under q -> q/2
SPECS = [whitham(), boussinesq(), boussinesq(0.5)]


def rel(a, b):
    return abs(a - b) / abs(b)


def non_increasing(seq):
    return all(b <= a for a, b in zip(seq, seq[1:]))


def comparisons(rec):
    res = rec.result
    d_eta, d_v = asy.compare_physical_kdv(asy.recover_physical(res), res.q, res.config.L0)
    return rec.h1_kdv_distance, d_eta, d_v


def solve_each(qs, spec):
    return {q: minimize_constrained(SolverConfig(q=q), spec, keep_history=False) for q in qs}


@pytest.fixture(scope="module")
def whitham_ladder():
    return sweep(LADDER, whitham(), SolverConfig())


@pytest.fixture(scope="module")
def whitham_halves():
    return solve_each([q / 2 for q in LADDER], whitham())


@pytest.fixture(scope="module")
def boussinesq_ladder():
    return sweep(LADDER, boussinesq(), SolverConfig())


@pytest.fixture(scope="module")
def random_inputs():
    rng = np.random.default_rng(7)
    grid = PeriodicGrid(40.0, 512)
    return grid, [GridFunction(grid, smooth_random(grid, rng, 0.1)) for _ in range(10)], rng


# 1 --------------------------------------------------------------------------

def test_c01_gradient_matches_finite_differences(random_inputs):
    grid, us, rng = random_inputs
    h = 1e-5
    worst = 0.0
    for spec in (whitham(), boussinesq()):
        for u in us:
            d = GridFunction(grid, smooth_random(grid, rng, 1.0))
            fd = (energy(u + h * d, spec) - energy(u - h * d, spec)) / (2 * h)
            worst = max(worst, rel(inner(grad_E(u, spec), d), fd))
    assert worst <= 1e-6


# 2 --------------------------------------------------------------------------

def test_c02_operator_identities(random_inputs):
    grid, us, rng = random_inputs
    for spec in SPECS:
        for u in us[:4]:
            back = apply_multiplier(apply_multiplier(u, spec, -0.5), spec, 0.5)
            assert l2_norm(back - u) <= 1e-12 * l2_norm(u)
        for k in (1, 9, 200):
            f = grid.sample(lambda x: np.cos(np.pi * k * x / grid.half_length))
            for alpha in (1.0, 0.5, -0.5):
                lam = eval_power(spec, np.pi * k / grid.half_length, alpha)
                out = apply_multiplier(f, spec, alpha)
                assert l2_norm(out - lam * f) <= 1e-12 * abs(lam) * l2_norm(f)
    for a, b in zip(us, us[1:]):
        A, B = np.fft.fft(a.values), np.fft.fft(b.values)
        spectral = grid.dx / grid.n * float(np.real(np.sum(A * np.conj(B))))
        assert rel(quadrature(a * b), spectral) <= 1e-12


# 3 --------------------------------------------------------------------------

def test_c03_energy_identities(random_inputs):
    grid, us, rng = random_inputs
    for spec in SPECS:
        for u in us:
            br = compute_breakdown(u, spec)
            assert rel(br.Lpart + br.Nc + br.Nr, br.E) <= 1e-12
            assert rel(energy(u, spec), br.E) <= 1e-12
            for a in (0.25, 4.0):
                expect = a * br.Lpart + a**1.5 * br.Nc + a**2 * br.Nr
                assert rel(energy(np.sqrt(a) * u, spec), expect) <= 1e-12
            assert rel(decompose_Nc(u, spec).total, br.Nc) <= 1e-12
            for j in rng.integers(-grid.n, grid.n, 5):
                assert rel(energy(circular_shift(u, j), spec), br.E) <= 1e-12


# 4 --------------------------------------------------------------------------

def test_c04_euler_homogeneity(random_inputs):
    grid, us, _ = random_inputs
    for spec in SPECS:
        for u in us:
            for scale in (0.1, 1.0, 10.0):
                v = scale * u
                br = compute_breakdown(v, spec)
                lhs = -2 * lagrange_multiplier(v, spec) * compute_Q(v)
                assert rel(lhs, 2 * br.Lpart + 3 * br.Nc + 4 * br.Nr) <= 1e-10


# 5 --------------------------------------------------------------------------

def test_c05_kdv_reference():
    psi = asy.kdv_profile(PeriodicGrid(50.0, 4096))
    assert abs(compute_Q(psi) - 1) <= 1e-10
    assert asy.kdv_el_residual(psi) <= 1e-8
    closed = -(36 / 5) * 2 ** (-10 / 3)
    assert abs(compute_E_kdv(psi) - closed) <= 1e-8


# 6 --------------------------------------------------------------------------

def test_c06_existence_regime_at_desk_scale(whitham_ladder, whitham_halves):
    by_q = {r.q: r for r in whitham_ladder}
    for q in (1e-2, 1e-3, 1e-4):
        rec = by_q[min(by_q, key=lambda p: abs(p - q))]
        assert rec.q == pytest.approx(q, rel=1e-12)
        res = rec.result
        assert res.converged and res.el_residual <= 1e-8
        assert -1 < res.lam < -0.5
        assert res.energy < res.q
        half = whitham_halves[q / 2]
        assert half.converged and half.el_residual <= 1e-8
        c1 = asy.size_ratios(res.u, q, whitham())["hs"]
        c2 = asy.size_ratios(half.u, q / 2, whitham())["hs"]
        assert np.isfinite(c1) and c1 > 0
        assert rel(c2, c1) <= STABLE


# 7 --------------------------------------------------------------------------

def test_c07_long_wave_rates(whitham_ladder):
    assert all(r.converged for r in whitham_ladder)
    lam_fit = asy.fit_multiplier_law(whitham_ladder)
    e_fit = asy.fit_energy_law(whitham_ladder)
    assert rel(lam_fit.slope, 3 / 16 ** (1 / 3)) <= 0.10
    assert rel(e_fit.slope, asy.I_KDV) <= 0.10
    dists = np.array([comparisons(r) for r in whitham_ladder])     # q descending
    ratios = dists / np.array(LADDER)[:, None] ** (1 / 6)
    for col in range(3):
        assert non_increasing(list(dists[:, col]))
        assert non_increasing(list(ratios[:, col]))
        assert np.all(np.isfinite(ratios[:, col]))


# 8 --------------------------------------------------------------------------

def test_c08_refined_size_bounds(whitham_ladder, whitham_halves):
    spec = whitham()
    table = []
    for rec in whitham_ladder:
        q = rec.q
        a = asy.size_ratios(rec.result.u, q, spec)
        b = asy.size_ratios(whitham_halves[q / 2].u, q / 2, spec)
        for key in ("sup", "dx", "dxx"):
            assert np.isfinite(a[key]) and a[key] > 0
            assert rel(b[key], a[key]) <= STABLE
        table.append([a["sup"], a["dx"], a["dxx"]])
    table = np.array(table)
    # bounded across two decades: no column varies by more than a factor 2
    assert np.all(table.max(axis=0) <= 2 * table.min(axis=0))


# 9 --------------------------------------------------------------------------

def test_c09_strict_subadditivity(whitham_ladder):
    I = {r.q: r.I_q for r in whitham_ladder}
    pairs = [(a, b) for a, b in itertools.combinations_with_replacement(LADDER, 2) if a + b <= 1e-2]
    assert len(pairs) >= 20
    sums = solve_each(sorted({a + b for a, b in pairs}), whitham())
    for a, b in pairs:
        r = sums[a + b]
        assert r.converged
        assert r.energy < I[a] + I[b]


# 10 -------------------------------------------------------------------------

def test_c10_boussinesq_corollary(boussinesq_ladder):
    b = 1 / 3
    assert all(r.converged for r in boussinesq_ladder)
    for rec in boussinesq_ladder:
        w = asy.recover_physical(rec.result)
        res = asy.boussinesq_steady_residual(w, -b, b, 0.0, b)
        assert res.r1 <= 1e-7 and res.r2 <= 1e-7
    assert rel(asy.fit_multiplier_law(boussinesq_ladder).slope, asy.LAMBDA0) <= 0.10
    assert rel(asy.fit_energy_law(boussinesq_ladder).slope, asy.I_KDV) <= 0.10
    dists = np.array([comparisons(r) for r in boussinesq_ladder])
    ratios = dists / np.array(LADDER)[:, None] ** (1 / 6)
    for col in range(3):
        assert non_increasing(list(dists[:, col]))
        assert non_increasing(list(ratios[:, col]))


# 11 -------------------------------------------------------------------------

def test_c11_admissibility_verdicts():
    w = check_admissibility(whitham())
    assert w.verdict and (w.s, w.s_prime) == (1, 2)
    for bb in (1 / 3, 0.5):
        rep = check_admissibility(boussinesq(bb))
        assert rep.verdict and (rep.s, rep.s_prime) == (2, 2)
    const = check_admissibility(custom(lambda xi: np.ones_like(xi), s=1, s_prime=2, name="constant"))
    assert not const.verdict


# 12 -------------------------------------------------------------------------

def test_c12_discretisation_inertness():
    base = SolverConfig(q=1e-3, grad_tol=1e-12)
    runs = [minimize_constrained(c, whitham(), keep_history=False)
            for c in (base, replace(base, n=2 * base.n), replace(base, L0=2 * base.L0))]
    assert all(r.converged for r in runs)
    ref = runs[0]
    ref_h1 = asy.kdv_compare(ref).h1_distance
    for r in runs[1:]:
        assert rel(r.energy, ref.energy) <= 1e-8
        assert rel(r.lam, ref.lam) <= 1e-8
        assert rel(asy.kdv_compare(r).h1_distance, ref_h1) <= 1e-8
