"""Independent checks: exhaustive grid search over small layer families and a
Monte Carlo L-statistic for distortion risks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .contracts import CededContract
from .distortion import DistortionFunction, RiskValue, distortion_risk, tail_risk
from .errors import GridTooLarge, InvalidParameter
from .losses import LossDistribution, draw_losses
from .objective import ProblemSpec, objective_direct
from .solver import SolutionReport, constants

MAX_EVALUATIONS = 10_000_000
MIN_MC_COUNT = 1_000
JACKKNIFE_BLOCKS = 10
DEFAULT_SLOPES = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class OracleResult:
    best_contract: CededContract
    best_objective: float
    grid_spec: dict
    evaluations: int

    def to_dict(self) -> dict:
        return {
            "best_contract": self.best_contract.to_list(),
            "best_objective": self.best_objective,
            "grid_spec": self.grid_spec,
            "evaluations": self.evaluations,
        }


def default_retention_grid(dist: LossDistribution, points: int = 81, tail: float = 1e-3) -> list[float]:
    """Evenly spaced retentions from 0 to ``S^-1(tail)``."""
    return np.linspace(0.0, dist.tail_cutoff(tail), points).tolist()


def brute_force_min(
    spec: ProblemSpec,
    n: int = 1,
    slope_grid: Sequence[float] = DEFAULT_SLOPES,
    retention_grid: Sequence[float] | None = None,
) -> OracleResult:
    """Minimize the objective over every grid contract with ``n`` layers.

    For ``n = 2`` retentions run over ``d1 <= d2`` and slope pairs over
    ``C1 + C2 <= 1``.  Each retention's distorted layer ``T_g(d)`` is
    integrated once, so a contract costs a dot product.  Ties go to the
    lexicographically first ``(slope index, retention index)``.

    Raises:
        InvalidParameter: ``n`` is not 1 or 2, or a grid is empty or unsorted.
        GridTooLarge: more than 10^7 contracts would be scored.
    """
    if n not in (1, 2):
        raise InvalidParameter("the grid oracle supports one or two layers")
    slopes = [float(c) for c in slope_grid]
    if not slopes or any(not 0.0 <= c <= 1.0 for c in slopes):
        raise InvalidParameter("slope grid must be a nonempty subset of [0, 1]")
    if retention_grid is None:
        retention_grid = default_retention_grid(spec.dist)
    rets = [float(d) for d in retention_grid]
    if not rets or any(b < a for a, b in zip(rets, rets[1:])) or rets[0] < 0:
        raise InvalidParameter("retention grid must be nonempty, sorted and nonnegative")

    ns, nd = len(slopes), len(rets)
    if n == 1:
        count = ns * nd
    else:
        slope_pairs = [(i, j) for i in range(ns) for j in range(ns) if slopes[i] + slopes[j] <= 1.0 + 1e-12]
        count = len(slope_pairs) * nd * (nd + 1) // 2
    if count > MAX_EVALUATIONS:
        raise GridTooLarge(f"{count} contracts exceed the limit of {MAX_EVALUATIONS}")

    k = constants(spec)
    base = k.m1 * distortion_risk(spec.g_alpha, spec.dist).value - k.D
    # gain of a unit stop-loss at each retention
    gain = np.zeros(nd)
    for idx, d in enumerate(rets):
        if k.m2:
            gain[idx] += k.m2 * tail_risk(spec.g_alpha, spec.dist, d).value
        if k.m3:
            gain[idx] -= k.m3 * tail_risk(spec.g_gamma, spec.dist, d).value
    s = np.asarray(slopes)

    if n == 1:
        values = base - np.outer(s, gain)  # [slope, retention]
        flat = int(np.argmin(values))
        ci, di = divmod(flat, nd)
        best = CededContract(((slopes[ci], rets[di]),))
    else:
        best_val, best = math.inf, None
        iu, ju = np.triu_indices(nd)
        for ci, cj in slope_pairs:
            vals = base - (s[ci] * gain[iu] + s[cj] * gain[ju])
            pos = int(np.argmin(vals))
            if vals[pos] < best_val:
                best_val = float(vals[pos])
                best = CededContract(((slopes[ci], rets[iu[pos]]), (slopes[cj], rets[ju[pos]])))
    step = float(np.max(np.diff(rets))) if nd > 1 else 0.0
    grid = {"n": n, "slopes": slopes, "retention_min": rets[0], "retention_max": rets[-1],
            "retention_points": nd, "retention_step": step}
    return OracleResult(best, objective_direct(spec, best), grid, count)


def _l_statistic(sorted_y: np.ndarray, g: DistortionFunction) -> float:
    n = sorted_y.size
    weights = np.diff(g(np.arange(n + 1) / n))
    # the k-th largest value carries g(k/n) - g((k-1)/n)
    return float(np.dot(sorted_y[::-1], weights))


def monte_carlo_risk(
    g: DistortionFunction,
    dist: LossDistribution,
    h: CededContract,
    count: int,
    seed: int,
) -> RiskValue:
    """L-statistic estimate of ``rho_g(h(X))`` with a 10-block jackknife standard error.

    The returned ``abs_error_estimate`` is one standard error.
    """
    if count < MIN_MC_COUNT:
        raise InvalidParameter(f"monte carlo needs at least {MIN_MC_COUNT} draws, got {count}")
    if h.is_null:
        return RiskValue(0.0, 0.0)
    y = h(draw_losses(dist, count, seed))
    est = _l_statistic(np.sort(y), g)
    blocks = np.array_split(np.arange(count), JACKKNIFE_BLOCKS)
    loo = []
    for b in blocks:
        keep = np.ones(count, dtype=bool)
        keep[b] = False
        loo.append(_l_statistic(np.sort(y[keep]), g))
    loo = np.asarray(loo)
    B = JACKKNIFE_BLOCKS
    se = math.sqrt((B - 1) / B * float(np.sum((loo - loo.mean()) ** 2)))
    return RiskValue(est, se)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    report_objective: float
    oracle_objective: float
    margin: float
    tolerance: float
    grid_spec: dict = field(default_factory=dict)
    seeds: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "report_objective": self.report_objective,
            "oracle_objective": self.oracle_objective,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "grid_spec": self.grid_spec,
            "seeds": list(self.seeds),
        }


def cross_validate(spec: ProblemSpec, report: SolutionReport, oracle: OracleResult, seeds: Sequence[int] = ()) -> Verdict:
    """Pass iff the solver is no worse than the grid optimum up to grid resolution.

    The tolerance is ``step * (|m2| + |m3|)``, a bound on how much the
    objective can move when one retention shifts by a grid step, plus a
    ``1e-6`` relative allowance for quadrature noise.
    """
    k = constants(spec)
    step = float(oracle.grid_spec.get("retention_step", 0.0))
    tol = step * (abs(k.m2) + abs(k.m3)) + 1e-6 * (1.0 + abs(oracle.best_objective))
    margin = oracle.best_objective - report.objective
    return Verdict(
        passed=bool(report.objective <= oracle.best_objective + tol),
        report_objective=report.objective,
        oracle_objective=oracle.best_objective,
        margin=margin,
        tolerance=tol,
        grid_spec=dict(oracle.grid_spec),
        seeds=tuple(seeds),
    )
