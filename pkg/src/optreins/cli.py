"""Command-line front end.

Usage::

    optreins solve --config problem.json --out-json report.json --out-csv plot.csv
    optreins constrained --config problem.json
    optreins verify --config problem.json --seed 7
    optreins sweep --config problem.json --out-csv sweep.csv

Exit codes: 0 success, 2 invalid configuration, 3 solver failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .contracts import CededContract
from .dual import ConstraintSet, solve_constrained
from .errors import InvalidParameter, ReinsuranceError
from .objective import ProblemSpec, premium
from .oracle import brute_force_min, cross_validate, default_retention_grid, monte_carlo_risk
from .solver import beta_for_threshold, constants, k_profile, solve

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4
MODES = ("solve", "constrained", "verify", "sweep")
TOP_KEYS = {"problem", "constraints", "sweep", "verify"}
CSV_POINTS = 512
CSV_TAIL = 1e-4
NEAR_BOUNDARY = 0.01
TIMESTAMP_KEY = "generated_at"


class ConfigError(InvalidParameter):
    pass


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "problem" not in data:
        raise ConfigError("config is missing required field 'problem'")
    return data


def _problem(data: dict, beta: float | None = None) -> ProblemSpec:
    prob = dict(data["problem"])
    if beta is not None:
        prob["beta"] = beta
    return ProblemSpec.from_dict(prob)


def _sweep_values(data: dict) -> list[float]:
    sw = data.get("sweep")
    if not isinstance(sw, dict):
        raise ConfigError("sweep mode needs a 'sweep' object")
    unknown = set(sw) - {"parameter", "values", "start", "stop", "step"}
    if unknown:
        raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
    if sw.get("parameter", "beta") != "beta":
        raise ConfigError("only 'beta' can be swept")
    if "values" in sw:
        values = [float(v) for v in sw["values"]]
    else:
        try:
            start, stop, step = float(sw["start"]), float(sw["stop"]), float(sw["step"])
        except KeyError as exc:
            raise ConfigError(f"sweep range is missing {exc}") from None
        if not step > 0:
            raise ConfigError("sweep step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + i * step, 12) for i in range(count)]
    if not values:
        raise ConfigError("sweep range is empty")
    return values


def _constraints(data: dict) -> ConstraintSet:
    c = data.get("constraints")
    if not isinstance(c, dict):
        raise ConfigError("constrained mode needs a 'constraints' object")
    unknown = set(c) - {"L1", "L2", "L3"}
    if unknown:
        raise ConfigError(f"unknown constraint keys: {sorted(unknown)}")
    return ConstraintSet(**{k: float(v) for k, v in c.items() if v is not None})


def _x_grid(spec: ProblemSpec, h: CededContract) -> np.ndarray:
    top = spec.dist.tail_cutoff(CSV_TAIL)
    xs = np.linspace(0.0, top, CSV_POINTS)
    return np.unique(np.concatenate((xs, [d for d in h.kinks if d <= top])))


def _write_contract_csv(path: str, spec: ProblemSpec, h: CededContract) -> None:
    xs = _x_grid(spec, h)
    fx = h(xs)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "f_star", "retained"])
        for x, f in zip(xs, fx):
            w.writerow([repr(float(x)), repr(float(f)), repr(float(x - f))])


def _write_json(path: str | None, payload: dict) -> None:
    payload = {TIMESTAMP_KEY: _dt.datetime.now(_dt.timezone.utc).isoformat(), **payload}
    text = json.dumps(payload, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")


def _cmd_solve(data, args) -> int:
    spec = _problem(data)
    rep = solve(spec)
    payload = {"mode": "solve", "problem": spec.to_dict(), "report": rep.to_dict()}
    _write_json(args.out_json, payload)
    if args.out_csv:
        _write_contract_csv(args.out_csv, spec, rep.f_star)
    print(f"case {rep.case_label.value}: {rep.f_star.describe()}; objective {rep.objective:.6f}"
          + (" (degenerate)" if rep.degenerate else ""))
    return EXIT_OK


def _cmd_constrained(data, args) -> int:
    spec = _problem(data)
    sol = solve_constrained(spec, _constraints(data))
    payload = {"mode": "constrained", "problem": spec.to_dict(), "report": sol.to_dict()}
    _write_json(args.out_json, payload)
    if args.out_csv:
        _write_contract_csv(args.out_csv, spec, sol.report.f_star)
    lam = ", ".join(f"{v:.6g}" for v in sol.lambdas)
    print(f"lambdas ({lam}): {sol.report.f_star.describe()}; primal objective {sol.primal_objective:.6f}; "
          f"kkt residual {sol.kkt_residual:.3g}")
    return EXIT_OK


def _cmd_verify(data, args) -> int:
    spec = _problem(data)
    opts = dict(data.get("verify") or {})
    unknown = set(opts) - {"n", "slopes", "retention_points", "mc_count"}
    if unknown:
        raise ConfigError(f"unknown verify keys: {sorted(unknown)}")
    rep = solve(spec)
    grid = default_retention_grid(spec.dist, int(opts.get("retention_points", 81)))
    oracle = brute_force_min(spec, int(opts.get("n", 2)), opts.get("slopes", (0.0, 0.25, 0.5, 0.75, 1.0)), grid)
    verdict = cross_validate(spec, rep, oracle, seeds=(args.seed,))
    payload = {"mode": "verify", "problem": spec.to_dict(), "report": rep.to_dict(),
               "oracle": oracle.to_dict(), "verdict": verdict.to_dict()}
    mc_count = int(opts.get("mc_count", 0))
    if mc_count and not rep.f_star.is_null:
        mc = monte_carlo_risk(spec.g_gamma, spec.dist, rep.f_star, mc_count, args.seed)
        exact = premium(spec, rep.f_star).value / (1.0 + spec.loading)
        payload["monte_carlo"] = {"ceded_premium_risk": mc.value, "standard_error": mc.abs_error_estimate,
                                  "quadrature": exact, "count": mc_count, "seed": args.seed}
    _write_json(args.out_json, payload)
    print(f"solver {rep.objective:.6f} vs grid {oracle.best_objective:.6f} "
          f"(margin {verdict.margin:.3g}, tolerance {verdict.tolerance:.3g}): {'PASS' if verdict.passed else 'FAIL'}")
    return EXIT_OK if verdict.passed else EXIT_VERIFY


def _boundaries(spec: ProblemSpec) -> dict:
    """Values of beta at which the dispatch regime changes."""
    l1, l2, _ = spec.lambdas
    out = {"m2_zero": (1.0 - l1 + l2) / 2.0}
    prof = k_profile(spec.g_alpha, spec.g_gamma, 1.0)
    for name, target in (("M_eq_kinf", prof.k_inf), ("M_eq_ksup", prof.k_sup)):
        try:
            out[name] = beta_for_threshold(spec, target) if math.isfinite(target) else None
        except ValueError:
            out[name] = None
    return out


def _cmd_sweep(data, args) -> int:
    values = _sweep_values(data)
    rows = []
    bounds = None
    for beta in values:
        spec = _problem(data, beta)
        if bounds is None:
            bounds = _boundaries(spec)
        rep = solve(spec)
        near = [k for k, b in bounds.items() if b is not None and abs(beta - b) <= NEAR_BOUNDARY]
        rows.append({
            "beta": beta,
            "case": rep.case_label.value,
            "contract": rep.f_star.describe(),
            "f_star": rep.f_star.to_list(),
            "retention": rep.retention,
            "M": constants(spec).M,
            "objective": rep.objective,
            "degenerate": rep.degenerate,
            "near_boundary": near,
        })
    _write_json(args.out_json, {"mode": "sweep", "boundaries": bounds, "rows": rows})
    if args.out_csv:
        with open(args.out_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["beta", "case", "retention", "objective"])
            for r in rows:
                w.writerow([r["beta"], r["case"], "" if r["retention"] is None else repr(r["retention"]),
                            repr(r["objective"])])
    for r in rows:
        flag = f"  [near {', '.join(r['near_boundary'])}]" if r["near_boundary"] else ""
        print(f"beta={r['beta']:<8g} {r['case']:<10} {r['contract']:<28} objective {r['objective']:.4f}{flag}")
    return EXIT_OK


COMMANDS = {"solve": _cmd_solve, "constrained": _cmd_constrained, "verify": _cmd_verify, "sweep": _cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optreins", description="Optimal reinsurance under distortion risk measures.")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", required=True, help="problem configuration (JSON)")
        p.add_argument("--out-json", help="write the JSON report here")
        p.add_argument("--out-csv", help="write CSV plot data here")
        p.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo checks")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        data = _load_config(args.config)
        return COMMANDS[args.mode](data, args)
    except InvalidParameter as exc:
        print(f"optreins: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReinsuranceError as exc:
        print(f"optreins: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
