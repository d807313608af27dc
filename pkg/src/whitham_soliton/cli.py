"""Command-line front end.

    whitham-soliton solve --q 1e-3 --out run/
    whitham-soliton sweep --config ladder.json --jobs 4
    whitham-soliton check-admissible --symbol boussinesq:0.5
    whitham-soliton kdv-compare --q 1e-3
    whitham-soliton system-residual --symbol boussinesq:0.3333333333333333

Settings come from an optional JSON config and are overridden by flags.
Exit status: 0 success, 1 configuration error, 2 numerical
non-convergence, 3 admissibility failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import asymptotics, io
from .solver import ConfigError, MinimizerResult, SolverConfig, SweepRecord, \
    minimize_constrained, multistart_check, sweep
from .symbols import SymbolSpec, check_admissibility, symbol_from_config, symbol_to_config

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_INADMISSIBLE = 0, 1, 2, 3
COMMANDS = ("solve", "sweep", "check-admissible", "kdv-compare", "system-residual")
JOBS_ENV = "WHITHAM_SOLITON_JOBS"
DEFAULT_LADDER = tuple(float(q) for q in np.logspace(-2, -4, 9))

log = logging.getLogger("whitham_soliton")


@dataclass
class RunConfig:
    command: str
    symbol: SymbolSpec
    solver: SolverConfig
    q_list: list = field(default_factory=list)
    output_dir: Path = Path(".")
    emit_profiles: bool = False
    jobs: int = 1
    warm_start: bool = True
    seed: int = 0
    multistart: int = 0
    admissibility: dict = field(default_factory=dict)


def config_schema() -> dict:
    """Every config key with its default (what ``--print-schema`` prints)."""
    return {
        "symbol": {"kind": "whitham | boussinesq | custom", "b": "boussinesq only",
                   "expr": "custom only: numpy expression in xi", "s": 2.0, "s_prime": 2.0,
                   "default": {"kind": "whitham"}},
        "solver": SolverConfig().to_dict(),
        "q_list": list(DEFAULT_LADDER),
        "output_dir": ".",
        "emit_profiles": False,
        "jobs": os.cpu_count() or 1,
        "warm_start": True,
        "seed": 0,
        "multistart": 0,
        "admissibility": {"eps": 0.1, "n_kernel": 2**20, "l_kernel": 2.0**12, "xi_max": 1e6,
                          "xi_min": 1e-3, "p": 4 / 3},
        "_precedence": "file < command-line flags; WHITHAM_SOLITON_JOBS overrides --jobs",
    }


def _parse_q_list(text: str) -> list:
    try:
        return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise ConfigError("q", f"cannot parse {text!r}") from None


def build_run_config(args: argparse.Namespace) -> RunConfig:
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError("config", "top level must be an object")

    try:
        symbol = symbol_from_config(args.symbol if args.symbol else raw.get("symbol", {"kind": "whitham"}))
    except (ValueError, TypeError) as exc:
        raise ConfigError("symbol", str(exc)) from None

    solver_raw = dict(raw.get("solver", {}))
    if "q" in raw and "q" not in solver_raw:
        solver_raw["q"] = raw["q"]
    solver = SolverConfig.from_dict(solver_raw)

    q_list = [float(q) for q in raw.get("q_list", [])] if "q_list" in raw else None
    if args.q is not None:
        qs = _parse_q_list(args.q)
        if args.command == "sweep":
            q_list = qs
        else:
            if len(qs) != 1:
                raise ConfigError("q", f"{args.command} takes a single value")
            solver = replace(solver, q=qs[0])
    if args.command == "sweep":
        if q_list is None:
            q_list = list(DEFAULT_LADDER)
        if not q_list:
            raise ConfigError("q_list", "must not be empty for a sweep")
        for q in q_list:
            replace(solver, q=q).validate()
    solver.validate()

    jobs = raw.get("jobs", os.cpu_count() or 1)
    if args.jobs is not None:
        jobs = args.jobs
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            jobs = int(env)
        except ValueError:
            raise ConfigError(JOBS_ENV, f"must be an integer, got {env!r}") from None
    if not (isinstance(jobs, int) and jobs >= 1):
        raise ConfigError("jobs", "must be a positive integer")

    out = Path(args.out if args.out else raw.get("output_dir", "."))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("output_dir", f"cannot create {out}: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError("output_dir", f"{out} is not writable")

    return RunConfig(
        command=args.command, symbol=symbol, solver=solver, q_list=q_list or [],
        output_dir=out, emit_profiles=bool(args.emit_profiles or raw.get("emit_profiles", False)),
        jobs=jobs, warm_start=bool(raw.get("warm_start", True)), seed=int(raw.get("seed", 0)),
        multistart=int(raw.get("multistart", 0)), admissibility=dict(raw.get("admissibility", {})),
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _profile_columns(res: MinimizerResult, with_kdv: bool) -> tuple[list, dict]:
    cols = {"x": res.grid.x, "u": res.u.values}
    if res.lam < 0:
        w = asymptotics.recover_physical(res)
        cols["eta"], cols["v"] = w.eta.values, w.v.values
    else:
        cols["eta"] = cols["v"] = np.full(res.grid.n, math.nan)
    if with_kdv:
        q = res.q
        cmp = asymptotics.kdv_compare(res) if res.converged else None
        x0 = cmp.shift if cmp else 0.0
        cols["psi_kdv"] = q ** (2 / 3) * asymptotics.psi_kdv(q ** (1 / 3) * res.grid.x - x0)
    names = list(cols)
    rows = [dict(zip(names, r)) for r in zip(*cols.values())]
    return names, rows


def _write_profile(path: Path, res: MinimizerResult, with_kdv: bool) -> None:
    names, rows = _profile_columns(res, with_kdv)
    io.write_table(path, names, rows)


def _result_json(res: MinimizerResult, extra: dict | None = None) -> dict:
    d = res.to_dict()
    d["symbol"] = symbol_to_config(res.symbol)
    if extra:
        d.update(extra)
    return d


def _solve(rc: RunConfig) -> MinimizerResult:
    res = minimize_constrained(rc.solver, rc.symbol, keep_history=False)
    if not res.converged:
        print(f"not converged at q={res.q:g}: {res.message} after {res.iters} iterations "
              f"(gradient {res.grad_norm:.3e})", file=sys.stderr)
    return res


def cmd_solve(rc: RunConfig) -> int:
    res = _solve(rc)
    extra = {}
    if rc.multistart and res.converged:
        extra["multistart"] = multistart_check(res, seed=rc.seed, n_starts=rc.multistart)
    io.write_json(rc.output_dir / "result.json", _result_json(res, extra))
    _write_profile(rc.output_dir / "profile.csv", res,
                   with_kdv=rc.emit_profiles and rc.symbol.has_kdv_limit)
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def _fits(records) -> dict:
    out = {"n_points": sum(r.converged for r in records)}
    try:
        lam_fit = asymptotics.fit_multiplier_law(records)
        e_fit = asymptotics.fit_energy_law(records)
    except asymptotics.InsufficientPointsError as exc:
        out.update(status="insufficient points", detail=str(exc))
        return out
    out.update(status="ok", lambda0_hat=lam_fit.slope, lambda0_residual=lam_fit.residual,
               I_kdv_hat=e_fit.slope, I_kdv_residual=e_fit.residual,
               lambda0=asymptotics.LAMBDA0, I_kdv=asymptotics.I_KDV)
    return out


def cmd_sweep(rc: RunConfig) -> int:
    qs = rc.q_list
    warm = rc.warm_start
    if warm:
        qs = sorted(qs, reverse=True)
    records = sweep(qs, rc.symbol, rc.solver, warm_start=warm, jobs=rc.jobs)
    cols = list(SweepRecord.CSV_FIELDS) + ["kdv_shift", "dist_eta", "dist_v", "message"]
    rows = []
    for rec in records:
        row = rec.to_row()
        row.update(kdv_shift=math.nan, dist_eta=math.nan, dist_v=math.nan)
        res = rec.result
        if res is not None and res.converged and rc.symbol.has_kdv_limit:
            row["kdv_shift"] = asymptotics.kdv_compare(res).shift
            row["dist_eta"], row["dist_v"] = asymptotics.compare_physical_kdv(
                asymptotics.recover_physical(res), res.q)
        rows.append(row)
    for row, rec in zip(rows, records):
        row["message"] = rec.message
    io.write_table(rc.output_dir / "sweep.csv", cols, rows)
    fits = _fits(records)
    io.write_json(rc.output_dir / "fits.json", fits)
    good = [r for r in records if r.converged]
    io.write_dat(rc.output_dir / "lambda_law.dat", [r.q ** (2 / 3) for r in good],
                 [r.lam + 1 for r in good], header="q^(2/3)  lambda+1")
    io.write_dat(rc.output_dir / "energy_law.dat", [r.q ** (5 / 3) for r in good],
                 [r.I_q - r.q for r in good], header="q^(5/3)  I_q-q")
    if rc.emit_profiles:
        pdir = rc.output_dir / "profiles"
        pdir.mkdir(exist_ok=True)
        for i, rec in enumerate(records):
            if rec.result is not None:
                _write_profile(pdir / f"profile_{i:02d}.csv", rec.result,
                               with_kdv=rc.symbol.has_kdv_limit)
    bad = [r for r in records if not r.converged]
    for r in bad:
        print(f"q={r.q:g}: not converged ({r.message})", file=sys.stderr)
    return EXIT_OK if not bad else EXIT_NONCONVERGED


def cmd_check_admissible(rc: RunConfig) -> int:
    try:
        report = check_admissibility(rc.symbol, **rc.admissibility)
    except TypeError as exc:
        raise ConfigError("admissibility", str(exc)) from None
    io.write_json(rc.output_dir / "admissibility.json", report.to_dict())
    if not report.verdict:
        failed = [k for k, v in report.to_dict().items() if k.endswith("_ok") and not v]
        print(f"symbol {rc.symbol.name} is not admissible: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    return EXIT_OK


def cmd_kdv_compare(rc: RunConfig) -> int:
    if not rc.symbol.has_kdv_limit:
        print(f"warning: symbol {rc.symbol.name} has no KdV limit with these constants; "
              "distances are not expected to be small", file=sys.stderr)
    res = _solve(rc)
    out = {"q": res.q, "converged": res.converged, "symbol": symbol_to_config(rc.symbol)}
    if res.converged:
        cmp = asymptotics.kdv_compare(res)
        d_eta, d_v = asymptotics.compare_physical_kdv(asymptotics.recover_physical(res), res.q)
        out.update(cmp.to_dict())
        out.update(dist_eta=d_eta, dist_v=d_v, ratio_eta=d_eta / res.q ** (1 / 6),
                   ratio_v=d_v / res.q ** (1 / 6))
    io.write_json(rc.output_dir / "kdv_compare.json", out)
    if rc.emit_profiles:
        _write_profile(rc.output_dir / "profile.csv", res, with_kdv=True)
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_system_residual(rc: RunConfig) -> int:
    res = _solve(rc)
    out = {"q": res.q, "converged": res.converged, "el_residual": res.el_residual,
           "symbol": symbol_to_config(rc.symbol)}
    if res.lam < 0:
        w = asymptotics.recover_physical(res)
        r = asymptotics.steady_residual(w, rc.symbol)
        out.update(speed_c=w.speed_c, r1=r.r1, r2=r.r2, flagged=r.flagged)
        if rc.symbol.kind == "boussinesq":
            b = rc.symbol.b
            rb = asymptotics.boussinesq_steady_residual(w, -b, b, 0.0, b)
            out.update(boussinesq_r1=rb.r1, boussinesq_r2=rb.r2)
    io.write_json(rc.output_dir / "system_residual.json", out)
    if rc.emit_profiles:
        _write_profile(rc.output_dir / "profile.csv", res, with_kdv=rc.symbol.has_kdv_limit)
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


HANDLERS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "check-admissible": cmd_check_admissible,
    "kdv-compare": cmd_kdv_compare,
    "system-residual": cmd_system_residual,
}


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors, not argparse's default status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="whitham-soliton",
                                description="Whitham-Boussinesq solitary waves by constrained minimisation.")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--q", help="constraint level; a comma-separated list for sweep")
    p.add_argument("--symbol", help="whitham | boussinesq:<b>")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--jobs", type=int, help=f"worker count; {JOBS_ENV} takes precedence")
    p.add_argument("--emit-profiles", action="store_true", help="also write x,u,eta,v,psi_kdv profiles")
    p.add_argument("--print-schema", action="store_true", help="print config keys and defaults, then exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:   # usage errors and --help
        return int(exc.code or 0)
    if args.print_schema:
        print(json.dumps(config_schema(), indent=2))
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("error: a command is required", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = build_run_config(args)
        return HANDLERS[rc.command](rc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
