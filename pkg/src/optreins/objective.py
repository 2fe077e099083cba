"""Problem specification, total-risk decomposition and the unified objective.

For ``h`` in the layer class, ``X = h(X) + (X - h(X))`` splits into two
comonotone pieces, so every risk below is assembled from the distorted
stop-loss layers ``T_g(d) = int_d^inf g(S(x)) dx``:

* ceded risk ``rho_g(h(X)) = sum_j C_j T_g(d_j)``;
* insurer ``rho_a(X) - rho_a(h(X)) + (1 + rho) rho_c(h(X))``;
* reinsurer ``rho_a(h(X)) - (1 + rho) rho_c(h(X))``;
* objective ``m1 rho_a(X) - m2 rho_a(h(X)) + m3 rho_c(h(X)) - D``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from .contracts import CededContract
from .distortion import (
    DistortionFunction,
    RiskValue,
    distortion_risk,
    quantile_stieltjes,
    tail_risk,
)
from .errors import InvalidParameter
from .losses import LossDistribution

SPEC_KEYS = ("beta", "loading", "g_alpha", "g_gamma", "dist", "lambdas", "levels")


@dataclass(frozen=True)
class ProblemSpec:
    """Weights, loading, distortion pair, multipliers and loss law.

    Attributes:
        beta: Weight on the insurer's total risk, in [0, 1].
        loading: Safety loading of the premium principle.
        g_alpha: Distortion of the risk measure.
        g_gamma: Distortion of the premium principle.
        dist: Ground-up loss.
        lambdas: Lagrange multipliers for the insurer, reinsurer and premium
            constraints.
        levels: Constraint levels ``(L1, L2, L3)``; ``None`` entries count as 0
            in ``D``.
    """

    beta: float
    loading: float
    g_alpha: DistortionFunction
    g_gamma: DistortionFunction
    dist: LossDistribution
    lambdas: tuple[float, float, float] = (0.0, 0.0, 0.0)
    levels: tuple[float | None, float | None, float | None] = (None, None, None)

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise InvalidParameter(f"beta must lie in [0, 1], got {self.beta}")
        if not self.loading >= 0:
            raise InvalidParameter(f"loading must be nonnegative, got {self.loading}")
        lam = tuple(float(v) for v in self.lambdas)
        if len(lam) != 3 or any(not (v >= 0 and math.isfinite(v)) for v in lam):
            raise InvalidParameter(f"lambdas must be three finite nonnegative numbers, got {self.lambdas}")
        object.__setattr__(self, "lambdas", lam)
        lev = tuple(None if v is None else float(v) for v in self.levels)
        if len(lev) != 3 or any(v is not None and not math.isfinite(v) for v in lev):
            raise InvalidParameter(f"levels must be three finite numbers or None, got {self.levels}")
        object.__setattr__(self, "levels", lev)
        s0 = self.dist.sf1(0.0)
        for name, g in (("alpha", self.g_alpha), ("gamma", self.g_gamma)):
            if g.level is not None and not g.level < s0:
                raise InvalidParameter(f"confidence level {name}={g.level} must be below S_X(0)={s0}")

    def replace(self, **changes) -> "ProblemSpec":
        data = {k: getattr(self, k) for k in SPEC_KEYS}
        data.update(changes)
        return ProblemSpec(**data)

    @property
    def D(self) -> float:
        return math.fsum(lam * (lev or 0.0) for lam, lev in zip(self.lambdas, self.levels))

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "loading": self.loading,
            "g_alpha": self.g_alpha.to_dict(),
            "g_gamma": self.g_gamma.to_dict(),
            "dist": self.dist.to_dict(),
            "lambdas": list(self.lambdas),
            "levels": list(self.levels),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ProblemSpec":
        unknown = set(data) - set(SPEC_KEYS)
        if unknown:
            raise InvalidParameter(f"unknown problem keys: {sorted(unknown)}")
        for key in ("beta", "loading", "g_alpha", "g_gamma", "dist"):
            if key not in data:
                raise InvalidParameter(f"problem is missing required field '{key}'")
        try:
            return cls(
                beta=float(data["beta"]),
                loading=float(data["loading"]),
                g_alpha=DistortionFunction.from_dict(data["g_alpha"]),
                g_gamma=DistortionFunction.from_dict(data["g_gamma"]),
                dist=LossDistribution.from_dict(data["dist"]),
                lambdas=tuple(data.get("lambdas") or (0.0, 0.0, 0.0)),
                levels=tuple(data.get("levels") or (None, None, None)),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidParameter):
                raise
            raise InvalidParameter(f"bad problem field: {exc}") from None


def ceded_risk(g: DistortionFunction, dist: LossDistribution, h: CededContract) -> RiskValue:
    """``rho_g(h(X))`` as a slope-weighted sum of distorted stop-loss layers."""
    total = RiskValue(0.0, 0.0)
    for c, d in h.terms:
        total = total + tail_risk(g, dist, d).scaled(c)
    return total


def retained_risk(g: DistortionFunction, dist: LossDistribution, h: CededContract) -> RiskValue:
    """``rho_g(X - h(X)) = rho_g(X) - rho_g(h(X))``."""
    return distortion_risk(g, dist) - ceded_risk(g, dist, h)


def premium(spec: ProblemSpec, h: CededContract) -> RiskValue:
    """Reinsurance premium ``(1 + rho) rho_gamma(h(X))``."""
    return ceded_risk(spec.g_gamma, spec.dist, h).scaled(1.0 + spec.loading)


def insurer_total_risk(spec: ProblemSpec, h: CededContract) -> RiskValue:
    """Retained risk plus premium paid."""
    return retained_risk(spec.g_alpha, spec.dist, h) + premium(spec, h)


def reinsurer_total_risk(spec: ProblemSpec, h: CededContract) -> RiskValue:
    """Distorted ceded risk minus premium received; may be negative."""
    return ceded_risk(spec.g_alpha, spec.dist, h) - premium(spec, h)


def objective_direct(spec: ProblemSpec, h: CededContract) -> float:
    """``m1 rho_a(X) - m2 rho_a(h(X)) + m3 rho_c(h(X)) - D``."""
    from .solver import constants

    k = constants(spec)
    value = k.m1 * distortion_risk(spec.g_alpha, spec.dist).value - k.D
    if k.m2 != 0.0:
        value -= k.m2 * ceded_risk(spec.g_alpha, spec.dist, h).value
    if k.m3 != 0.0:
        value += k.m3 * ceded_risk(spec.g_gamma, spec.dist, h).value
    return value


def lagrangian_value(spec: ProblemSpec, h: CededContract) -> float:
    """``beta I + (1 - beta) R + l1 I + l2 R + l3 P - D`` from the total risks."""
    ins = insurer_total_risk(spec, h).value
    rei = reinsurer_total_risk(spec, h).value
    prem = premium(spec, h).value
    l1, l2, l3 = spec.lambdas
    return spec.beta * ins + (1.0 - spec.beta) * rei + l1 * ins + l2 * rei + l3 * prem - spec.D


def layered_quantile_risk(g: DistortionFunction, dist: LossDistribution, h: CededContract) -> float:
    """``rho_g(h(X))`` as a sum of Stieltjes integrals over probability bands.

    With retentions ``d_1 <= ... <= d_n`` the band ``(S(d_{i+1}), S(d_i)]``
    carries the integrand ``sum_{j <= i} C_j (S^-1(t) - d_j)``.
    """
    terms = h.terms
    total = 0.0
    for i in range(len(terms)):
        upper = dist.sf1(terms[i][1])
        lower = dist.sf1(terms[i + 1][1]) if i + 1 < len(terms) else 0.0
        if upper <= lower:
            continue
        active = terms[: i + 1]

        def phi(x, active=active):
            return sum(c * (x - d) for c, d in active)

        kinks = [d for _, d in terms]
        total += quantile_stieltjes(g, dist, lower, upper, phi, kinks).value
    return total


def objective_layered(spec: ProblemSpec, h: CededContract) -> float:
    """The objective rebuilt entirely from quantile-form integrals against ``dg``.

    Independent of :func:`objective_direct`, which integrates survival
    functions over loss levels.
    """
    from .solver import constants

    k = constants(spec)
    value = k.m1 * quantile_stieltjes(spec.g_alpha, spec.dist, 0.0, 1.0).value - k.D
    if k.m2 != 0.0:
        value -= k.m2 * layered_quantile_risk(spec.g_alpha, spec.dist, h)
    if k.m3 != 0.0:
        value += k.m3 * layered_quantile_risk(spec.g_gamma, spec.dist, h)
    return value


# name required by the public interface
objective_lemma31 = objective_layered
