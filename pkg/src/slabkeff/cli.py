"""Command-line front end.

Commands: ``solve``, ``bounds``, ``verify`` and ``oracle-check``.  Each one
reads a JSON problem config and writes a JSON report with the top-level keys
``meta``, ``existence``, ``solution``, ``variational``, ``bounds`` and
``oracle`` (unused sections are ``null``).

Exit codes: 0 ok, 1 input error, 2 existence failure, 3 bound contradiction,
4 invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import STRATEGIES, BoundsError, bounds_report
from .diffusion import DiffusionError
from .oracle import DimensionError, OracleError, assemble_dense, oracle_keff, vector_angle
from .problem import ProblemError, ProblemModel, build_problem
from .solver import (CRITICAL_BAND, GAMMA_MIN_PROBE, POWER_TOL, ROOT_TOL, ExistenceError,
                     SolverError, approximate_eigenfunction, check_existence,
                     solve_keff_direct, solve_keff_rootfind)
from .variational import SANDWICH_SLACK, sandwich_verify

log = logging.getLogger("slabkeff")

EXIT_OK, EXIT_INPUT, EXIT_EXISTENCE, EXIT_CONTRADICTION, EXIT_INVARIANT = 0, 1, 2, 3, 4
AGREEMENT_TOL = 1e-8
ORACLE_AGREEMENT = 1e-10
COLLAPSE_TOL = 1e-6

FLAGS = {
    "gamma_min_probe": GAMMA_MIN_PROBE,
    "gamma_min_probe_is_proxy_for_limit": True,
    "criticality_band": CRITICAL_BAND,
    "face_averaging": "arithmetic mean of neighbouring cells",
    "dirichlet_closure": "mirror ghost cell, face on the slab boundary",
    "transport_stencil": "first-order upwind, zero inflow",
    "stay_time": "discrete, upwind derivative one",
    "power_iteration_stop": "Collatz-Wielandt gap",
    "speed_shell_weights": "unit weight per direction node",
    "sandwich_slack": SANDWICH_SLACK,
}


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# serialisation

def _clean(obj):
    """Make a report JSON-safe; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def dumps(report: dict) -> str:
    # repr-based float output is shortest round-trip, hence lossless
    return json.dumps(_clean(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def digest(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read problem file {path}: {exc.strerror}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: "
                         f"{exc.msg}") from exc
    if not isinstance(config, dict):
        raise InputError(f"{path}: top-level JSON value must be an object")
    return config


def phi_csv(p: ProblemModel, phi: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "node", "value"])
    x = p.geometry.centers
    nodes = p.grid.nodes
    for i in range(phi.shape[0]):
        for j in range(phi.shape[1]):
            w.writerow([repr(float(x[i])), repr(float(nodes[j])), repr(float(phi[i, j]))])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands

def _empty_report(command: str, config: dict | None, seed=None) -> dict:
    meta = {"tool": "slabkeff", "version": __version__, "command": command,
            "problem_digest": digest(config) if config is not None else None,
            "seed": seed, "flags": dict(FLAGS), "status": None, "error": None,
            "timing": {}}
    return {"meta": meta, "existence": None, "solution": None, "variational": None,
            "bounds": None, "oracle": None}


def _existence(report: dict, p: ProblemModel):
    chk = check_existence(p)
    report["existence"] = {"exists": chk.exists, "r_sigma_Ls": chk.r_sigma_Ls,
                           "r_small_gamma": chk.r_small_gamma, "gamma_min": chk.gamma_min,
                           "scattering_ok": chk.scattering_ok,
                           "small_gamma_ok": chk.small_gamma_ok,
                           "failed_conditions": chk.failed_conditions,
                           "note": "the gamma -> 0 limit is probed at gamma_min"}
    if not chk.exists:
        raise ExistenceError("k_eff does not exist: failed " + ", ".join(chk.failed_conditions), chk)
    return chk


def cmd_solve(args, p: ProblemModel, report: dict) -> int:
    _existence(report, p)
    kw = {} if args.tol is None else {"tol": args.tol}
    sols = {}
    if args.method in ("rootfind", "both"):
        sols["rootfind"] = solve_keff_rootfind(p, **kw)
    if args.method in ("direct", "both"):
        sols["direct"] = solve_keff_direct(p, **kw)
    section = {name: s.summary() for name, s in sols.items()}
    primary = sols.get("rootfind") or sols["direct"]
    section["k_eff"] = primary.k_eff
    section["classification"] = primary.classification.value
    code = EXIT_OK
    if len(sols) == 2:
        rel = abs(sols["rootfind"].k_eff - sols["direct"].k_eff) / sols["direct"].k_eff
        section["agreement"] = {"relative_difference": rel, "tolerance": AGREEMENT_TOL,
                                "ok": rel <= AGREEMENT_TOL}
        if rel > AGREEMENT_TOL:
            code = EXIT_INVARIANT
    report["solution"] = section
    if args.csv:
        write_atomic(args.csv, phi_csv(p, primary.phi))
    return code


def cmd_bounds(args, p: ProblemModel, report: dict) -> int:
    _existence(report, p)
    sol = solve_keff_rootfind(p)
    report["solution"] = {"rootfind": sol.summary(), "k_eff": sol.k_eff,
                          "classification": sol.classification.value}
    strategies = list(STRATEGIES) if args.psi == "all" else [args.psi]
    rep = bounds_report(p, strategies)
    bad = rep.contradictions(sol.k_eff)
    section = rep.summary()
    section["cross_check"] = {"k_eff": sol.k_eff, "slack": 1e-10,
                              "contradictions": [b.summary() for b in bad]}
    report["bounds"] = section
    return EXIT_CONTRADICTION if bad else EXIT_OK


def cmd_verify(args, p: ProblemModel, report: dict) -> int:
    _existence(report, p)
    sol = solve_keff_rootfind(p)
    report["solution"] = {"rootfind": sol.summary(), "k_eff": sol.k_eff,
                          "classification": sol.classification.value}
    k_check = sol.k_eff * args.corrupt_keff
    sw = sandwich_verify(p, k_check, args.samples, args.seed, phi_eff=sol.phi, strict=False)
    if k_check != sol.k_eff:
        sol.k_eff = k_check
    approx = approximate_eigenfunction(p, sol)
    collapse_ok = sw.collapse_spread is not None and sw.collapse_spread <= COLLAPSE_TOL
    summary = sw.summary()
    report["variational"] = {
        "samples": args.samples, "seed": args.seed,
        "violations": summary["violations"], "best_lower": sw.best_lower,
        "best_upper": sw.best_upper, "collapse_spread": sw.collapse_spread,
        "collapse_ok": collapse_ok,
        "reports": summary["reports"],
        "eigenfunction_approximation": approx.summary(),
    }
    ok = not sw.violations and collapse_ok and approx.converged
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_oracle_check(args, p: ProblemModel, report: dict) -> int:
    sys_ = assemble_dense(p)
    _existence(report, p)
    sol = solve_keff_rootfind(p)
    ref = oracle_keff(sys_)
    rel = abs(ref.k_eff - sol.k_eff) / ref.k_eff
    angle = vector_angle(ref.vector, sol.phi)
    report["solution"] = {"rootfind": sol.summary(), "k_eff": sol.k_eff,
                          "classification": sol.classification.value}
    report["oracle"] = {"dimension": sys_.dim, "k_eff": ref.k_eff, "iterations": ref.iterations,
                        "abs_difference": abs(ref.k_eff - sol.k_eff),
                        "relative_difference": rel, "tolerance": ORACLE_AGREEMENT,
                        "eigenvector_angle": angle, "ok": rel <= ORACLE_AGREEMENT}
    return EXIT_OK if rel <= ORACLE_AGREEMENT else EXIT_INVARIANT


COMMANDS = {"solve": cmd_solve, "bounds": cmd_bounds, "verify": cmd_verify,
            "oracle-check": cmd_oracle_check}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slabkeff",
                                     description="Criticality eigenvalue of slab transport and diffusion problems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--problem", required=True, help="JSON problem config")
        sp.add_argument("--out", help="report path (stdout when omitted)")

    sp = sub.add_parser("solve", help="compute k_eff and the eigenfunction")
    common(sp)
    sp.add_argument("--method", choices=("rootfind", "direct", "both"), default="rootfind")
    sp.add_argument("--tol", type=float, default=None,
                    help=f"solver tolerance (default {ROOT_TOL:g} rootfind, {POWER_TOL:g} direct)")
    sp.add_argument("--csv", help="write phi_eff as x,node,value rows")

    sp = sub.add_parser("bounds", help="explicit bounds cross-checked against a solve")
    common(sp)
    sp.add_argument("--psi", choices=STRATEGIES + ("all",), default="ones")

    sp = sub.add_parser("verify", help="sandwich test and eigenfunction approximation")
    common(sp)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--corrupt-keff", type=float, default=1.0, help=argparse.SUPPRESS)

    sp = sub.add_parser("oracle-check", help="compare with the dense reference solver")
    common(sp)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    config = None
    report = _empty_report(args.command, None, getattr(args, "seed", None))
    start = time.perf_counter()
    try:
        if getattr(args, "samples", 0) < 0:
            raise InputError("--samples must be non-negative")
        config = load_config(args.problem)
        report = _empty_report(args.command, config, getattr(args, "seed", None))
        p = build_problem(config)
        code = COMMANDS[args.command](args, p, report)
    except (InputError, ProblemError, DimensionError, BoundsError, DiffusionError) as exc:
        code, report["meta"]["error"] = EXIT_INPUT, f"input error: {exc}"
    except ExistenceError as exc:
        code, report["meta"]["error"] = EXIT_EXISTENCE, str(exc)
    except (SolverError, OracleError) as exc:
        code, report["meta"]["error"] = EXIT_INVARIANT, str(exc)
    report["meta"]["status"] = code
    report["meta"]["timing"] = {"seconds": time.perf_counter() - start}
    if report["meta"]["error"]:
        print(report["meta"]["error"], file=sys.stderr)
    text = dumps(report)
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
