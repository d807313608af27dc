import math
from dataclasses import replace

import numpy as np
import pytest

from whitham_soliton import asymptotics as asy
from whitham_soliton import boussinesq, whitham
from whitham_soliton.functionals import compute_breakdown, compute_Q, energy
from whitham_soliton.grid import GridFunction, PeriodicGrid, inner, l2_norm
from whitham_soliton.solver import (
    ConfigError, SolverConfig, SweepRecord, el_residual, initial_guess, lagrange_multiplier,
    minimize_constrained, multistart_check, project_tangent, sweep,
)

from conftest import smooth_random


@pytest.fixture(scope="module")
def solved():
    return minimize_constrained(SolverConfig(q=1e-3), whitham())


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_defaults():
    c = SolverConfig()
    assert (c.L0, c.n, c.max_iters, c.grad_tol, c.armijo_c, c.step_init, c.step_shrink) == \
        (50.0, 4096, 50_000, 1e-9, 1e-4, 1.0, 0.5)


@pytest.mark.parametrize("field, value", [
    ("q", -1.0), ("q", 0.0), ("q", 0.5), ("q", math.nan), ("n", 4095), ("grad_tol", 0.0),
    ("step_shrink", 1.0), ("max_iters", 0), ("L0", -3.0),
])
def test_invalid_config_names_field(field, value):
    with pytest.raises(ConfigError) as exc:
        replace(SolverConfig(), **{field: value}).validate()
    assert exc.value.field == field


def test_from_dict_round_trip_and_errors():
    c = SolverConfig(q=2e-3, n=1024, preconditioned=False)
    assert SolverConfig.from_dict(c.to_dict()) == c
    assert SolverConfig.from_dict({"n": 2048.0}).n == 2048
    with pytest.raises(ConfigError) as exc:
        SolverConfig.from_dict({"tolerance": 1})
    assert exc.value.field == "tolerance"
    for bad in ({"q": "small"}, {"preconditioned": "yes"}, {"n": 10.5}):
        with pytest.raises(ConfigError):
            SolverConfig.from_dict(bad)


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------

def test_initial_guess():
    g = PeriodicGrid(50.0, 4096)
    u = initial_guess(1.0, g)
    np.testing.assert_allclose(u.values, asy.psi_kdv(g.x), rtol=1e-10)
    q = 1e-3
    grid = SolverConfig(q=q).grid
    v = initial_guess(q, grid)
    assert abs(compute_Q(v) - q) <= 1e-12 * q
    assert v.values[grid.center_index] == pytest.approx(-0.0119055, rel=1e-5)


def test_project_tangent(rng):
    g = PeriodicGrid(20.0, 128)
    u = GridFunction(g, smooth_random(g, rng))
    f = GridFunction(g, smooth_random(g, rng))
    assert l2_norm(project_tangent(u, u)) <= 1e-14 * l2_norm(u)
    p = project_tangent(f, u)
    assert abs(inner(p, u)) <= 1e-12 * l2_norm(f) * l2_norm(u)
    np.testing.assert_allclose(project_tangent(p, u).values, p.values, atol=1e-15)
    with pytest.raises(ValueError):
        project_tangent(f, g.zeros())


@pytest.mark.parametrize("spec", [whitham(), boussinesq(0.5)], ids=lambda s: s.name)
def test_homogeneity_identity_at_any_u(spec, rng):
    g = PeriodicGrid(30.0, 256)
    for amp in (0.01, 0.3, 2.0):
        u = GridFunction(g, smooth_random(g, rng, amp))
        lam = lagrange_multiplier(u, spec)
        br = compute_breakdown(u, spec)
        lhs = -2 * lam * compute_Q(u)
        rhs = 2 * br.Lpart + 3 * br.Nc + 4 * br.Nr
        assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_single_mode_multiplier():
    ell = 4.0
    g = PeriodicGrid(ell, 64)
    spec = whitham()
    lam = [lagrange_multiplier(GridFunction(g, e * np.cos(np.pi * g.x / ell)), spec) for e in (1e-4, 1e-6)]
    target = -spec(np.pi / ell)
    # lam + m(pi/l) is O(eps): cubic term vanishes, quartic leaves O(eps^2)
    assert abs(lam[1] - target) < 1e-10
    assert abs(lam[1] - target) < abs(lam[0] - target) + 1e-15


def test_el_residual_zero_input():
    assert el_residual(PeriodicGrid(1.0, 8).zeros(), -1.0, whitham()) == 0.0


# ---------------------------------------------------------------------------
# solves
# ---------------------------------------------------------------------------

def test_whitham_solve(solved):
    r = solved
    assert r.converged and r.message == "converged"
    assert r.el_residual <= 1e-8
    assert abs(compute_Q(r.u) - r.q) <= 1e-12 * r.q
    assert -1 < r.lam < -0.5
    assert r.speed_c == pytest.approx((-r.lam) ** -0.5, rel=1e-15)
    assert r.energy < r.q
    # KKT residual tracks the stopping rule
    assert r.el_residual * math.sqrt(2) <= 10 * r.config.grad_tol


def test_whitham_profile_shape(solved):
    u = solved.u.values
    c = solved.grid.center_index
    assert np.argmin(u) == c
    assert np.all(u[np.abs(u) > 1e-14] < 0)
    # even about the crest
    assert np.max(np.abs(u[c + 1:] - u[c - 1:0:-1])) <= 1e-12 * np.max(np.abs(u))
    assert np.max(np.abs(u)) / solved.q ** (2 / 3) == pytest.approx(1.19, rel=0.05)


def test_energy_decreases_with_armijo_margin():
    cfg = SolverConfig(q=3e-3, preconditioned=False, max_iters=400)
    r = minimize_constrained(cfg, whitham())
    E = np.array(r.history["energy"])
    steps = np.array(r.history["step"])
    slopes = np.array(r.history["slope"])
    k = len(steps)
    dE = np.diff(E)[:k]
    assert np.all(slopes < 0)
    # sufficient decrease on every accepted step (slope is -|tangential gradient|^2 here);
    # the slack covers the O(1e-16 q) gap between E and E + lambda Q on the sphere
    assert np.all(dE <= cfg.armijo_c * steps * slopes + 1e-15 * cfg.q)


def test_recorded_energies_match_direct_evaluation():
    r = minimize_constrained(SolverConfig(q=1e-3), whitham())
    assert r.history["energy"][-1] == pytest.approx(energy(r.u, whitham()), rel=1e-12)


@pytest.mark.parametrize("iters", [1, 5, 20])
def test_constraint_held_on_early_stop(iters):
    r = minimize_constrained(SolverConfig(q=1e-3, max_iters=iters), whitham())
    assert abs(compute_Q(r.u) - 1e-3) <= 1e-12 * 1e-3
    if not r.converged:
        assert r.message == "iteration limit reached" and r.iters == iters


def test_homogeneity_identity_along_iterates():
    spec = whitham()
    for iters in (0, 3, 10):
        r = minimize_constrained(SolverConfig(q=5e-3, max_iters=max(iters, 1)), spec)
        lhs = -2 * r.lam * compute_Q(r.u)
        br = r.breakdown
        assert abs(lhs - (2 * br.Lpart + 3 * br.Nc + 4 * br.Nr)) <= 1e-10 * lhs


def test_unconverged_guess_has_larger_residual(solved):
    q = 1e-3
    u0 = initial_guess(q, solved.grid)
    lam0 = -1 + asy.LAMBDA0 * q ** (2 / 3)
    assert el_residual(u0, lam0, whitham()) > 10 * solved.el_residual


def test_plain_and_preconditioned_agree(solved):
    plain = minimize_constrained(replace(solved.config, preconditioned=False), whitham())
    assert plain.converged
    assert plain.energy == pytest.approx(solved.energy, rel=1e-12)
    assert plain.lam == pytest.approx(solved.lam, rel=1e-8)


def test_boussinesq_solve():
    r = minimize_constrained(SolverConfig(q=1e-3), boussinesq())
    assert r.converged and -1 < r.lam < -0.5 and r.energy < r.q
    assert asy.kdv_compare(r).ratio < 0.1


def test_wrong_grid_start_rejected(solved):
    with pytest.raises(ValueError):
        minimize_constrained(SolverConfig(q=1e-3), whitham(), u0=PeriodicGrid(1.0, 4096).zeros())


def test_result_serialises(solved):
    d = solved.to_dict()
    assert d["converged"] is True and d["lambda"] == solved.lam
    assert d["grid"] == {"l": solved.grid.half_length, "n": 4096}


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def test_single_point_sweep_equals_fresh_solve():
    cfg = SolverConfig(q=1e-2)
    rec, = sweep([1e-2], whitham(), cfg)
    fresh = minimize_constrained(cfg, whitham())
    assert rec.I_q == fresh.energy and rec.lam == fresh.lam
    assert rec.converged
    assert set(rec.to_row()) == set(SweepRecord.CSV_FIELDS)


def test_sweep_order_enforced():
    with pytest.raises(ValueError):
        sweep([1e-3, 1e-2], whitham(), SolverConfig())


def test_failed_points_are_kept():
    recs = sweep([1e-2, 1e-3], whitham(), SolverConfig(max_iters=1))
    assert len(recs) == 2 and not any(r.converged for r in recs)
    assert all(math.isnan(r.h1_kdv_distance) for r in recs)


def test_cold_parallel_sweep_matches_serial():
    qs = [1e-2, 1e-3, 1e-4]
    a = sweep(qs, whitham(), SolverConfig(), warm_start=False, jobs=1)
    b = sweep(qs, whitham(), SolverConfig(), warm_start=False, jobs=3)
    assert [r.to_row() for r in a] == [r.to_row() for r in b]


def test_warm_and_cold_sweeps_agree():
    qs = [1e-2, 3e-3, 1e-3]
    warm = sweep(qs, whitham(), SolverConfig())
    cold = sweep(qs, whitham(), SolverConfig(), warm_start=False)
    for w, c in zip(warm, cold):
        assert w.I_q == pytest.approx(c.I_q, rel=1e-12)


def test_multistart_does_not_flag_minimiser(solved):
    out = multistart_check(solved, seed=1, n_starts=2)
    assert not out["flagged"]
    assert all(math.isfinite(e) for e in out["restart_energies"])
    assert all(e >= solved.energy - 1e-10 * solved.q for e in out["restart_energies"])
    assert multistart_check(solved, seed=1, n_starts=2) == out
