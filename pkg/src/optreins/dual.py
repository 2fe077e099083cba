"""Constrained design: risk caps and a premium budget via Lagrange multipliers.

The constrained problem minimizes ``beta I + (1 - beta) R`` subject to
``I <= L1``, ``R <= L2`` and ``P <= L3`` (any subset).  For fixed multipliers
the Lagrangian is the unified objective handled by :func:`solver.solve`; the
dual function ``q(lambda)`` is its minimum value.  Each active multiplier is
searched on a geometric grid, the best grid cell is refined by golden
section on ``q``, and finally the slack of that constraint is driven to zero
by bisection.  Among all evaluated multipliers the feasible one with the
smallest primal objective is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from scipy import optimize

from .contracts import CededContract
from .errors import Infeasible, InvalidParameter
from .objective import ProblemSpec, insurer_total_risk, premium, reinsurer_total_risk
from .solver import SolutionReport, solve

LAMBDA_GRID = (0.0,) + tuple(10.0 ** k for k in range(-4, 3))
LAMBDA_TOL = 1e-6
FEAS_RTOL = 1e-6
SWEEPS = 3
BISECT_ITERS = 80


@dataclass(frozen=True)
class ConstraintSet:
    """Levels for the insurer cap, reinsurer cap and premium budget; ``None`` = absent."""

    L1: float | None = None
    L2: float | None = None
    L3: float | None = None

    def __post_init__(self):
        for name in ("L1", "L2", "L3"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(float(v)):
                raise InvalidParameter(f"{name} must be finite")
        if all(v is None for v in self.levels):
            raise InvalidParameter("at least one constraint level is required")

    @property
    def levels(self) -> tuple[float | None, float | None, float | None]:
        return (self.L1, self.L2, self.L3)

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(i for i, v in enumerate(self.levels) if v is not None)

    def tolerance(self, i: int) -> float:
        return FEAS_RTOL * (1.0 + abs(self.levels[i]))


@dataclass(frozen=True)
class DualSolution:
    lambdas: tuple[float, float, float]
    report: SolutionReport
    slacks: tuple[float | None, float | None, float | None]
    kkt_residual: float
    primal_objective: float
    dual_value: float
    evaluations: int = 0

    def to_dict(self) -> dict:
        out = self.report.to_dict()
        out.update(
            lambdas=list(self.lambdas),
            slacks=list(self.slacks),
            kkt_residual=self.kkt_residual,
            primal_objective=self.primal_objective,
            dual_value=self.dual_value,
        )
        return out


def check_feasibility(
    spec: ProblemSpec, h: CededContract, constraints: ConstraintSet
) -> tuple[float | None, float | None, float | None]:
    """``(I - L1, R - L2, P - L3)`` with ``None`` for absent constraints."""
    funcs: tuple[Callable, ...] = (insurer_total_risk, reinsurer_total_risk, premium)
    return tuple(
        None if lev is None else f(spec, h).value - lev for f, lev in zip(funcs, constraints.levels)
    )


def primal_objective(spec: ProblemSpec, h: CededContract) -> float:
    """``beta I + (1 - beta) R``."""
    return spec.beta * insurer_total_risk(spec, h).value + (1.0 - spec.beta) * reinsurer_total_risk(spec, h).value


@dataclass
class _Point:
    lambdas: tuple[float, float, float]
    report: SolutionReport
    slacks: tuple
    feasible: bool
    primal: float


@dataclass
class _Search:
    base: ProblemSpec
    cons: ConstraintSet
    cache: dict = field(default_factory=dict)

    def at(self, lam: tuple[float, float, float]) -> _Point:
        lam = tuple(float(v) for v in lam)
        if lam not in self.cache:
            spec = self.base.replace(lambdas=lam, levels=self.cons.levels)
            rep = solve(spec)
            slacks = check_feasibility(spec, rep.f_star, self.cons)
            ok = all(s is None or s <= self.cons.tolerance(i) for i, s in enumerate(slacks))
            self.cache[lam] = _Point(lam, rep, slacks, ok, primal_objective(spec, rep.f_star))
        return self.cache[lam]

    def q(self, lam) -> float:
        return self.at(lam).report.objective


def _with(lam, i, v):
    out = list(lam)
    out[i] = max(float(v), 0.0)
    return tuple(out)


def _coordinate_step(search: _Search, lam, i) -> tuple:
    grid = [search.q(_with(lam, i, v)) for v in LAMBDA_GRID]
    j = max(range(len(grid)), key=lambda k: (grid[k], -k))
    lo = LAMBDA_GRID[max(j - 1, 0)]
    hi = LAMBDA_GRID[min(j + 1, len(LAMBDA_GRID) - 1)]
    best_v = LAMBDA_GRID[j]
    if hi > lo:
        res = optimize.minimize_scalar(
            lambda v: -search.q(_with(lam, i, v)),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": LAMBDA_TOL},
        )
        if -res.fun >= grid[j]:
            best_v = float(res.x)
    best_v = _drive_slack(search, lam, i, best_v)
    return _with(lam, i, best_v)


def _drive_slack(search: _Search, lam, i, v) -> float:
    """Move ``lambda_i`` onto the boundary where constraint ``i`` just holds."""
    pts = sorted(
        (p.lambdas[i], p.slacks[i])
        for p in search.cache.values()
        if all(p.lambdas[k] == lam[k] for k in range(3) if k != i)
    )
    # bracket the sign change of the slack itself, not of slack - tol
    infeasible = [x for x, s in pts if s > 0.0]
    feasible = [x for x, s in pts if s <= 0.0]
    if not infeasible or not feasible:
        return v
    lo = max(infeasible)
    above = [x for x in feasible if x > lo]
    if not above:
        return v
    hi = min(above)
    for _ in range(BISECT_ITERS):
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
        mid = 0.5 * (lo + hi)
        if search.at(_with(lam, i, mid)).slacks[i] > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def solve_constrained(spec_base: ProblemSpec, constraints: ConstraintSet) -> DualSolution:
    """Search the multipliers of the present constraints.

    Args:
        spec_base: Problem whose ``lambdas`` and ``levels`` are ignored.
        constraints: Levels of the constraints to enforce.

    Returns:
        The feasible Lagrangian minimizer with the smallest primal objective,
        with its slacks and ``max_i |lambda_i slack_i|``.

    Raises:
        Infeasible: no multiplier in ``[0, 100]^k`` gave a feasible contract.
    """
    search = _Search(spec_base, constraints)
    lam = (0.0, 0.0, 0.0)
    search.at(lam)
    sweeps = 1 if len(constraints.active) == 1 else SWEEPS
    for _ in range(sweeps):
        for i in constraints.active:
            lam = _coordinate_step(search, lam, i)
    feasible = [p for p in search.cache.values() if p.feasible]
    if not feasible:
        raise Infeasible(f"no multiplier in [0, {LAMBDA_GRID[-1]:g}] satisfies {constraints}")
    best = min(feasible, key=lambda p: (round(p.primal, 9), p.lambdas))
    kkt = max((abs(l * s) for l, s in zip(best.lambdas, best.slacks) if s is not None), default=0.0)
    return DualSolution(
        lambdas=best.lambdas,
        report=best.report,
        slacks=best.slacks,
        kkt_residual=kkt,
        primal_objective=best.primal,
        dual_value=best.report.objective,
        evaluations=len(search.cache),
    )
