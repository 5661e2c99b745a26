"""Command-line entry point: ``dswave {run,check,certify,lemmas}``.

Exit codes: 0 success, 1 verdict or invariant failure, 2 usage, I/O, parse,
validation or geometry errors.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .core import SpaceTimeSolution
from .degiorgi import certify
from .energy import (
    Cylinder,
    ball_mask,
    build_cutoff,
    caccioppoli_report,
    cell_gradient_magnitude,
    time_weights,
    weak_residual,
)
from .errors import (
    CalibrationError,
    ConvergenceError,
    DomainError,
    GeometryError,
    ParseError,
    QuadratureError,
    ValidationError,
)
from .mollifier import TimeSignal, check_lp_contraction
from .scenarios import ScenarioConfig, build_control, build_problem, load_config, preset_config
from .snapshots import load_solution, write_diagnostics, write_snapshots
from .suites import run_all
from .timestepper import run

log = logging.getLogger("dswave")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

_USAGE_ERRORS = (ParseError, ValidationError, GeometryError, QuadratureError, DomainError, OSError)
_VERDICT_ERRORS = (CalibrationError, ConvergenceError, AssertionError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _thread_limit():
    """Cap BLAS/OpenMP pools at ``DSW_THREADS`` when set."""
    raw = os.environ.get("DSW_THREADS")
    if not raw:
        return contextlib.nullcontext()
    try:
        limit = int(raw)
    except ValueError:
        raise ParseError(f"DSW_THREADS must be an integer, got {raw!r}") from None
    if limit < 1:
        raise ParseError("DSW_THREADS must be >= 1")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=limit)


def _load(target: str) -> ScenarioConfig:
    if target.startswith("preset:"):
        return preset_config(target.split(":", 1)[1])
    return load_config(target)


def _out_dir(cfg: ScenarioConfig, override) -> Path:
    return Path(override) if override else cfg.resolve(cfg.outputs.dir)


def _solution(cfg: ScenarioConfig, snapshots) -> SpaceTimeSolution:
    problem = build_problem(cfg)
    if snapshots:
        return load_solution(snapshots, problem)
    return run(problem, build_control(cfg))


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, default=_jsonable))


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _floats(text: str, label: str) -> list:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ParseError(f"{label}: expected comma-separated numbers, got {text!r}") from None


# ---------------------------------------------------------------------------
# subcommands

def cmd_run(args) -> int:
    cfg = _load(args.config)
    sol = _solution(cfg, None)
    out = _out_dir(cfg, args.out)
    write_snapshots(sol, out / "snapshots")
    write_diagnostics(sol, out / "diagnostics.csv")
    print(f"{cfg.name}: {len(sol.times)} snapshots, clipped mass {sol.total_clipped_mass:.3e} -> {out}")
    return EXIT_OK


def default_cylinders(sol: SpaceTimeSolution, center=None, radius=None):
    """Outer ``B_R x (T/2 -+ 0.4 T)`` centred in the domain, inner with half the sizes."""
    grid = sol.grid
    T = sol.T
    if center is None:
        xo = tuple(grid.origin[d] + 0.5 * grid.extent[d] for d in range(grid.n))
        to = 0.5 * T
    else:
        xo, to = tuple(center[:-1]), center[-1]
    R = radius if radius is not None else 0.3 * min(grid.extent)
    theta = 0.4 * T
    outer = Cylinder(xo, to, R, theta)
    inner = Cylinder(xo, to, 0.5 * R, 0.5 * theta)
    return inner, outer


def k_ladder(sol: SpaceTimeSolution, outer: Cylinder, levels: int, top: float = 1.0) -> list:
    """``levels`` equally spaced truncation levels from 0 up to ``top`` times the outer max."""
    mask = ball_mask(sol.grid, outer.center, outer.radius)
    w = time_weights(sol.times, outer.t_lo, outer.t_hi)
    vmax = float(np.max(sol.values[w > 0][:, mask]))
    return [top * vmax * i / levels for i in range(levels)]


def mollifier_checks(sol: SpaceTimeSolution) -> dict:
    """L^p contraction of the time mollification of ``v^beta`` and ``|grad v^beta|``."""
    params = sol.params
    vb = np.power(sol.values, params.beta)
    signals = {"v_beta": vb, "grad_v_beta": cell_gradient_magnitude(vb, sol.grid)}
    out = {}
    h = 0.1 * sol.T
    for name, values in signals.items():
        sig = TimeSignal(sol.times, values)
        for p in (1.0, 2.0, params.gamma + 1.0):
            lhs, rhs = check_lp_contraction(sig, h, p, sol.grid.cell_volume)
            out[f"{name}_p={p:g}"] = {"lhs": lhs, "rhs": rhs, "passed": lhs <= rhs * (1.0 + 1e-10)}
    return out


def cmd_check(args) -> int:
    cfg = _load(args.config)
    sol = _solution(cfg, args.snapshots)
    center = _floats(args.center, "--center") if args.center else None
    if center is not None and len(center) != sol.grid.n + 1:
        raise ParseError(f"--center needs {sol.grid.n} space coordinates and a time")
    inner, outer = default_cylinders(sol, center, args.radius)
    ladder = k_ladder(sol, outer, args.k_ladder)
    reports = [caccioppoli_report(sol, inner, outer, k) for k in ladder]
    lhs = [r.lhs_total for r in reports]
    ratios = [r.empirical_ratio for r in reports]
    monotone = all(b <= a * (1.0 + 1e-12) + 1e-300 for a, b in zip(lhs, lhs[1:]))
    finite = all(math.isfinite(r) for r in ratios)
    residual = weak_residual(sol, build_cutoff(inner, outer))
    moll = mollifier_checks(sol)
    suites = [s.to_dict() for s in run_all(args.seed)]
    checks = {
        "caccioppoli_lhs_monotone": monotone,
        "caccioppoli_ratio_finite": finite,
        "mollifier_contraction": all(m["passed"] for m in moll.values()),
        "weak_residual_finite": math.isfinite(residual),
        "lemma_suites": all(s["passed"] for s in suites),
    }
    payload = {
        "scenario": cfg.name,
        "seed": args.seed,
        "inner": inner.as_dict(),
        "outer": outer.as_dict(),
        "energy_reports": [r.to_dict() for r in reports],
        "weak_residual": residual,
        "mollifier": moll,
        "lemma_suites": suites,
        "checks": checks,
        "passed": all(checks.values()),
    }
    path = Path(args.out) if args.out else _out_dir(cfg, None) / cfg.outputs.energy_report
    _write_json(path, payload)
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if payload["passed"] else EXIT_FAIL


def cmd_certify(args) -> int:
    cfg = _load(args.config)
    coords = _floats(args.center, "--center")
    problem_n = cfg.parameters.n
    if len(coords) != problem_n + 1:
        raise ParseError(f"--center needs {problem_n} space coordinates and a time")
    sol = _solution(cfg, args.snapshots)
    report = certify(sol, coords[:-1], coords[-1], args.rho, j_max=args.jmax)
    path = Path(args.out) if args.out else _out_dir(cfg, None) / cfg.outputs.certificate
    _write_json(path, report.to_dict())
    verdict = "bound satisfied" if report.bound_satisfied else "bound VIOLATED"
    print(f"{verdict}: sup {report.measured_sup:.6g} vs k {report.k_final:.6g} (c = {report.calibrated_c:g})")
    return EXIT_OK if report.bound_satisfied else EXIT_FAIL


def cmd_lemmas(args) -> int:
    results = run_all(args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}")
    if args.out:
        _write_json(Path(args.out), {"seed": args.seed, "suites": [r.to_dict() for r in results]})
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dswave", description="Diffusive-wave solver and regularity checks.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a scenario and write snapshots plus diagnostics")
    p.add_argument("config", help="TOML file or preset:<name>")
    p.add_argument("--out", help="output directory (default: outputs.dir)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="energy report, mollifier checks and lemma suites")
    p.add_argument("config")
    p.add_argument("--k-ladder", type=int, default=5, dest="k_ladder")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snapshots", help="reuse a snapshot directory instead of running")
    p.add_argument("--center", help="x[,y],t of the cylinders (default: domain centre, T/2)")
    p.add_argument("--radius", type=float, help="outer radius (default: 0.3 * smallest extent)")
    p.add_argument("--out", help="report path")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("certify", help="local boundedness certificate")
    p.add_argument("config")
    p.add_argument("--center", required=True, help="x[,y],t")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--jmax", type=int, default=12)
    p.add_argument("--snapshots")
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("lemmas", help="seeded property suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lemmas)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "k_ladder", 1) < 1:
        print("dswave: error: --k-ladder must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        with _thread_limit():
            return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"dswave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _VERDICT_ERRORS as exc:
        print(f"dswave: failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
