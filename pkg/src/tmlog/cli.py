"""Command-line entry point: one subcommand per verification suite, JSON reports out."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import euler_lagrange as el
from . import extremal_solver as es
from . import moser_sequence as ms
from . import moving_plane as mp
from .errors import (CSVFormatError, GrowthOverflow, IllConditionedPoint, InvalidArgument,
                     StallError, UndefinedMultiplier, UnsupportedInput)
from .fractional_calculus import normalization_constant, normalization_constant_numeric
from .function_space import Grid1D, SampledFunction, make_interval_grid, read_csv, write_csv
from .growth_models import parse_growth
from .log_functionals import identity_discrepancy, phi_report, psi_report

SCHEMA_VERSION = 1
SUBCOMMANDS = ("verify-constants", "moser", "functional", "identity-check", "maximize",
               "el-check", "moving-plane", "all")


@dataclass
class RunConfig:
    subcommand: str
    grid: int = 257
    half_width: float = 1.0
    refine: int = 4
    growth: str = "power:2"
    gamma: Optional[float] = None
    n: str = "100,1000,10000"
    tol: float = 1e-3
    max_iter: int = 2000
    seed: int = 7
    input: Optional[str] = None
    out: Optional[str] = None
    plateau: bool = False
    lambda_min: float = -8.0
    lambda_max: float = 2.0
    lambda_steps: int = 21


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# file I/O


def load_function(path):
    if not os.path.exists(path):
        raise UsageError(f"input file not found: {path}")
    return read_csv(path)


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d):
        raise UsageError(f"output directory does not exist: {d}")
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmlog-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def save_report(path, report):
    body = dict(report)
    body["schema_version"] = SCHEMA_VERSION
    _atomic_write(path, json.dumps(_jsonable(body), indent=2) + "\n")


def save_function(path, u):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmlog-", suffix=".csv")
    os.close(fd)
    try:
        write_csv(u, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sidecar(cfg, suffix):
    if not cfg.out:
        return None
    root, _ = os.path.splitext(cfg.out)
    return root + suffix


class Suite:
    """Collects results, non-gating findings and gating failures for one subcommand."""

    def __init__(self, name):
        self.name = name
        self.results = {}
        self.findings = []
        self.failures = []

    def check(self, label, ok, **detail):
        if not ok:
            self.failures.append(dict(suite=self.name, check=label, **detail))
        return ok

    def finding(self, label, **detail):
        self.findings.append(dict(suite=self.name, item=label, **detail))

    def report(self):
        return dict(suite=self.name, results=self.results, findings=self.findings,
                    failures=self.failures, passed=not self.failures)


def _growth(cfg):
    try:
        return parse_growth(cfg.growth)
    except CSVFormatError:
        raise
    except (InvalidArgument, OSError) as exc:
        raise UsageError(f"--growth: {exc}") from None


def _n_list(cfg):
    try:
        return [int(float(t)) for t in cfg.n.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--n expects a comma-separated list of integers, got {cfg.n!r}") from None


# ---------------------------------------------------------------------------
# suites


def suite_constants(cfg):
    s = Suite("verify-constants")
    c_num = normalization_constant_numeric(0.5)
    c_closed = normalization_constant(0.5, 1)
    a_val, a_tail = ms.A_constant()
    s.results.update(C_1_half=c_num, C_1_half_closed=c_closed, inv_pi=1.0 / math.pi,
                     A=a_val, A_tail_bound=a_tail, A_claimed=ms.A_CLAIMED, A_closed_form=math.pi ** 2 / 2)
    s.check("C_1_half numeric vs 1/pi", abs(c_num - 1.0 / math.pi) <= 1e-8, value=c_num)
    s.check("C_1_half closed form vs numeric", abs(c_num - c_closed) <= 1e-8, value=c_closed)
    s.check("A converged", a_tail <= 1e-12, tail=a_tail)
    if abs(a_val - ms.A_CLAIMED) > 1e-6:
        s.finding("A differs from the claimed pi^2/4", computed=a_val, claimed=ms.A_CLAIMED,
                  ratio=a_val / ms.A_CLAIMED)
    return s


def suite_moser(cfg):
    s = Suite("moser")
    gamma = 0.5 if cfg.gamma is None else cfg.gamma
    G = parse_growth(f"critical:gamma={gamma}") if cfg.growth == "power:2" else _growth(cfg)
    c1 = ms.default_c1(G, gamma)
    rows = []
    for n in _n_list(cfg):
        try:
            w = ms.verify_normalization(n)
        except InvalidArgument as exc:
            raise UsageError(f"--n: {exc}") from None
        rel = abs(w.seminorm_sq_numeric - w.seminorm_sq_closed) / w.seminorm_sq_closed
        s.check(f"n={n}: numeric vs closed seminorm within 1%", rel <= 0.01, rel_gap=rel)
        s.check(f"n={n}: quarter norm <= 1", w.in_unit_ball, value=w.quarter_norm_sq)
        row = w.to_dict()
        try:
            phi, lb = ms.phi_moser(n, G, gamma, c1, refine=cfg.refine)
            row.update(phi_direct=phi, phi_lower_bound=lb)
        except GrowthOverflow as exc:
            row.update(phi_direct=None, overflow=str(exc))
        rows.append(row)
        if abs(w.bracket_value / math.pi - 1.0) > 0.05:
            s.finding(f"n={n}: bracket bound outside 5% of pi", bracket_over_pi=w.bracket_value / math.pi)
    s.results.update(gamma=gamma, c1=c1, growth=G.describe(), witnesses=rows)
    return s


def suite_functional(cfg):
    s = Suite("functional")
    if not cfg.input:
        raise UsageError("functional needs --input PATH")
    u = load_function(cfg.input)
    G = _growth(cfg)
    a, b = u.grid.hull
    inside = a >= -1.0 - 1e-12 and b <= 1.0 + 1e-12
    rep = phi_report(u, G, cfg.refine) if inside else psi_report(u, G, cfg.refine)
    s.results.update(functional="phi" if inside else "psi", **rep.to_dict())
    s.check("finite value", math.isfinite(rep.phi), value=rep.phi)
    return s


def suite_identity(cfg):
    s = Suite("identity-check")
    if cfg.input and not cfg.plateau:
        v = load_function(cfg.input)
    else:
        v = SampledFunction(make_interval_grid(cfg.grid, 1.0), np.ones(cfg.grid))
    recs = identity_discrepancy(v, [0.25, 0.5, 0.75])
    s.results["records"] = [r.to_dict() for r in recs]
    for r in recs:
        # discrepancies are findings by design
        s.finding(r.probe, direct=r.direct_value, formula=r.formula_value, gap=r.abs_gap)
    return s


def _solve(cfg, G):
    grid = make_interval_grid(cfg.grid, cfg.half_width)
    opts = es.SolverOptions(max_iter=cfg.max_iter, tol=cfg.tol, seed=cfg.seed, refine=cfg.refine)
    try:
        return es.maximize(G, grid, opts), None
    except StallError as exc:
        return exc.state, str(exc)


def suite_maximize(cfg):
    s = Suite("maximize")
    G = _growth(cfg)
    t0 = time.perf_counter()
    state, stall = _solve(cfg, G)
    c = state.coefficients
    phis = [h[1] for h in state.history]
    s.results.update(state.to_dict(), seconds=time.perf_counter() - t0, el_theta=el.el_coefficient(state.theta))
    s.check("no stall", stall is None, message=stall)
    s.check("converged", state.converged, kkt=state.kkt_residual)
    s.check("monotone ascent", all(b >= a - 1e-12 * abs(a) for a, b in zip(phis, phis[1:])))
    s.check("active constraint", abs(state.constraint_value - 1.0) <= 1e-8, value=state.constraint_value)
    s.check("even", float(np.max(np.abs(c - c[::-1]))) <= 1e-8)
    s.check("positive interior", bool(np.all(c[1:-1] > 0)))
    s.check("phi > 0", state.phi > 0, value=state.phi)
    path = _sidecar(cfg, "_u.csv")
    if path:
        save_function(path, state.function())
        s.results["function_csv"] = path
    return s


def suite_el(cfg):
    s = Suite("el-check")
    G = _growth(cfg)
    if cfg.input:
        u = load_function(cfg.input)
        if u.grid.hull[0] < -1 - 1e-12 or u.grid.hull[1] > 1 + 1e-12:
            raise UsageError("el-check expects a maximizer on a grid inside [-1, 1]")
        grid = Grid1D(u.grid.nodes, True)
        prob = es._Problem(grid, G, cfg.refine)
        mult, kkt = prob.multiplier(u.values)
    else:
        state, _ = _solve(cfg, G)
        u = state.function()
        mult, kkt = es.theta_estimate(state, G, cfg.refine)
    theta = el.el_coefficient(mult)
    w = el.w_potential(u, G, refine=cfg.refine)
    rep = el.system_residual(u, w, theta, G, mass_term=False, refine=cfg.refine)
    s.results.update(rep.to_dict(), multiplier=mult, kkt=kkt)
    s.check("residual_u <= 0.05", rep.residual_u <= 0.05, value=rep.residual_u)
    s.check("residual_w <= 0.05", rep.residual_w <= 0.05, value=rep.residual_w)
    return s


def suite_moving_plane(cfg):
    s = Suite("moving-plane")
    G = _growth(cfg)
    if cfg.input:
        u = load_function(cfg.input)
    else:
        grid = make_interval_grid(cfg.grid if cfg.grid % 2 else cfg.grid + 1, 40.0)
        u = SampledFunction(grid, 1.0 / (1.0 + grid.nodes ** 2))
    lams = np.linspace(cfg.lambda_min, cfg.lambda_max, cfg.lambda_steps)
    try:
        diag = mp.sweep(u, G, lams, (cfg.lambda_min, cfg.lambda_max))
    except InvalidArgument as exc:
        s.check("lambda_1 predicate holds at lambda_min", False, message=str(exc))
        return s
    s.results.update(diag.to_dict())
    s.results["reflection_leaves_hull"] = [mp.reflection_leaves_hull(u, l) for l in lams]
    s.check("c_lambda >= 0", all(c >= 0 for c in diag.c_lambda))
    s.check("sigma_minus_measure >= 0", all(m >= 0 for m in diag.sigma_minus_measure))
    return s


SUITES = {
    "verify-constants": suite_constants,
    "moser": suite_moser,
    "functional": suite_functional,
    "identity-check": suite_identity,
    "maximize": suite_maximize,
    "el-check": suite_el,
    "moving-plane": suite_moving_plane,
}


# ---------------------------------------------------------------------------
# argument parsing


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=int, default=257, help="number of grid nodes")
    common.add_argument("--half-width", type=float, default=1.0)
    common.add_argument("--refine", type=int, default=4, help="refinement factor for G(u)")
    common.add_argument("--growth", default="power:2", help="power:P | critical:gamma=G[,c=C] | piecewise:gamma=G | table:PATH")
    common.add_argument("--gamma", type=float, default=None)
    common.add_argument("--n", default="100,1000,10000", help="comma-separated Moser indices")
    common.add_argument("--tol", type=float, default=1e-3)
    common.add_argument("--max-iter", type=int, default=2000)
    common.add_argument("--seed", type=int, default=7)
    common.add_argument("--input", default=None, help="two-column x,value CSV")
    common.add_argument("--out", default=None, help="JSON report path (stdout if omitted)")

    p = argparse.ArgumentParser(prog="tmlog", description="Numerical checks for fractional log-kernel Trudinger-Moser problems.")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name in ("identity-check", "all"):
            sp.add_argument("--plateau", action="store_true", help="use the unit plateau on (-1, 1)")
        if name in ("moving-plane", "all"):
            sp.add_argument("--lambda-min", type=float, default=-8.0)
            sp.add_argument("--lambda-max", type=float, default=2.0)
            sp.add_argument("--lambda-steps", type=int, default=21)
    return p


def parse_config(argv):
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(**{k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__})
    if cfg.grid < 3:
        raise UsageError("--grid must be at least 3")
    if cfg.refine < 1:
        raise UsageError("--refine must be positive")
    if cfg.input and not os.path.exists(cfg.input):
        raise UsageError(f"input file not found: {cfg.input}")
    if cfg.out and not os.path.isdir(os.path.dirname(os.path.abspath(cfg.out))):
        raise UsageError(f"output directory does not exist: {cfg.out}")
    return cfg


def _run_all(cfg):
    reports = []
    for name, fn in SUITES.items():
        if name == "functional" and not cfg.input:
            continue
        sub = RunConfig(**dict(asdict(cfg), subcommand=name))
        if name != "functional":
            sub.input = None
        reports.append(fn(sub).report())
    failures = [f for r in reports for f in r["failures"]]
    return dict(suite="all", suites=reports, failures=failures, passed=not failures)


def run(argv=None):
    """Execute one subcommand; returns 0 (all checks passed), 1 (failures) or 2 (usage/IO)."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    except UsageError as exc:
        print(f"tmlog: error: {exc}", file=sys.stderr)
        return 2
    try:
        if cfg.subcommand == "all":
            report = _run_all(cfg)
        else:
            report = SUITES[cfg.subcommand](cfg).report()
    except CSVFormatError as exc:
        print(f"tmlog: error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, OSError) as exc:
        print(f"tmlog: error: {exc}", file=sys.stderr)
        return 2
    except (InvalidArgument, UnsupportedInput, UndefinedMultiplier, IllConditionedPoint, GrowthOverflow) as exc:
        report = dict(suite=cfg.subcommand, results={}, findings=[],
                      failures=[dict(suite=cfg.subcommand, check="input accepted", message=str(exc))],
                      passed=False)
    report["config"] = asdict(cfg)
    if cfg.out:
        try:
            save_report(cfg.out, report)
        except (UsageError, OSError) as exc:
            print(f"tmlog: error: {exc}", file=sys.stderr)
            return 2
    else:
        report["schema_version"] = SCHEMA_VERSION
        json.dump(_jsonable(report), sys.stdout, indent=2)
        sys.stdout.write("\n")
    return 0 if report["passed"] else 1


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
