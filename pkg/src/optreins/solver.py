"""Lagrangian constants, the K(t) profile and the optimal-contract dispatcher.

With ``T_g(d) = int_d^inf g(S(x)) dx`` the objective of a layer contract is

    m1 rho_a(X) - D - sum_j C_j Phi(d_j),   Phi(d) = m2 T_a(d) - m3 T_c(d),

and ``Phi'(d) = -H(d)`` with ``H(x) = m2 g_a(S(x)) - m3 g_c(S(x))``.  Because
the slopes sum to at most one, the minimum over the class is
``max(0, sup_d Phi(d))``, attained by the null contract or a single
stop-loss whose retention is ``0`` or a point where ``H`` changes sign,
i.e. where ``K(S(x)) = g_a/g_c`` crosses ``M = m3/m2``.  The dispatcher
locates those crossings (``a_hat``, ``b_hat``), labels the geometry and
returns the contract the case analysis prescribes.  Every candidate is also
scored directly so numerical ties cannot push the answer off the optimum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from .contracts import CededContract
from .distortion import DistortionFunction, DistortionKind, distortion_risk, tail_risk
from .errors import ProfileIndeterminate, UnsupportedShape
from .objective import ProblemSpec, objective_direct

M2_ZERO_TOL = 1e-12
SCAN_POINTS = 10_000
SCAN_EPS = 1e-6
ROOT_TOL = 1e-10
INDETERMINATE_SHARE = 0.01
TANGENCY_TOL = 1e-9
# a candidate must beat the dispatched contract by this much to replace it
RESCUE_TOL = 1e-9


class CaseLabel(str, Enum):
    M2_ZERO = "M2_ZERO"
    M_LE_KINF = "M_LE_KINF"
    M_GE_KSUP = "M_GE_KSUP"
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"
    F = "F"
    DEGENERATE = "DEGENERATE"


@dataclass(frozen=True)
class LagrangianConstants:
    m1: float
    m2: float
    m3: float
    D: float

    @property
    def M(self) -> float | None:
        if self.m2 == 0.0:
            return None
        return self.m3 / self.m2

    def to_dict(self) -> dict:
        return {"m1": self.m1, "m2": self.m2, "m3": self.m3, "D": self.D, "M": self.M}


def constants(spec: ProblemSpec) -> LagrangianConstants:
    """``m1 = beta + l1``, ``m2 = 2 beta - 1 + l1 - l2``,
    ``m3 = (1 + rho)(m2 + l3)`` and ``D = sum l_i L_i``.

    ``m2`` within ``1e-12`` of zero is snapped to exactly zero so that
    rounding in ``2 beta - 1 + l1 - l2`` cannot invent a huge ``M``.
    """
    l1, l2, l3 = spec.lambdas
    m1 = spec.beta + l1
    m2 = math.fsum((2.0 * spec.beta, -1.0, l1, -l2))
    if abs(m2) <= M2_ZERO_TOL:
        m2 = 0.0
    m3 = (1.0 + spec.loading) * math.fsum((m2, l3))
    if abs(m3) <= M2_ZERO_TOL:
        m3 = 0.0
    return LagrangianConstants(m1=m1, m2=m2, m3=m3, D=spec.D)


def k_ratio(g_alpha: DistortionFunction, g_gamma: DistortionFunction, t: float) -> float:
    """``g_a(t) / g_c(t)``; ``inf`` when only the denominator vanishes, ``nan`` for 0/0."""
    num, den = g_alpha.g1(t), g_gamma.g1(t)
    if den == 0.0:
        return math.inf if num > 0.0 else math.nan
    return num / den


@dataclass(frozen=True)
class KProfile:
    """Geometry of ``K`` against a threshold ``M``.

    ``a_hat`` is present only when ``K < M`` just above zero and ``b_hat``
    only when ``K < M`` just below one; each marks where ``K`` crosses ``M``.
    """

    k_sup: float
    k_inf: float
    a_hat: float | None
    b_hat: float | None
    tangency_points: tuple[float, ...] = ()
    shape: str = "scanned"
    crossings: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "k_sup": _json_num(self.k_sup),
            "k_inf": _json_num(self.k_inf),
            "a_hat": self.a_hat,
            "b_hat": self.b_hat,
            "tangency_points": list(self.tangency_points),
            "shape": self.shape,
        }


def _json_num(v: float):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def _is_identity(g: DistortionFunction) -> bool:
    return g.kind is DistortionKind.IDENTITY


def k_profile(g_alpha: DistortionFunction, g_gamma: DistortionFunction, M: float, scan: bool = False) -> KProfile:
    """Bounds of ``K`` plus ``a_hat = min{t: K >= M}``, ``b_hat = max{t: K >= M}``.

    Step and TVaR risk distortions against the identity premium use closed
    forms; anything else (or ``scan=True``) runs a 10^4-point scan of
    ``(1e-6, 1 - 1e-6)`` refined by bisection.

    Raises:
        ProfileIndeterminate: ``K`` is 0/0 on more than 1% of the scan.
        UnsupportedShape: ``K - M`` changes sign more than twice.

    Two crossings with ``K`` above ``M`` at both ends give ``shape="valley"``
    with neither ``a_hat`` nor ``b_hat``.
    """
    if not math.isfinite(M):
        raise ValueError("threshold M must be finite")
    if not scan and _is_identity(g_gamma):
        if g_alpha.kind is DistortionKind.VAR_STEP:
            return _var_profile(g_alpha.level, M)
        if g_alpha.kind is DistortionKind.TVAR:
            return _tvar_profile(g_alpha.level, M)
    return _scan_profile(g_alpha, g_gamma, M)


def _var_profile(alpha: float, M: float) -> KProfile:
    # K = 0 on (0, alpha), 1/t on [alpha, 1)
    k_sup, k_inf = 1.0 / alpha, 0.0
    a_hat = b_hat = None
    tangency: tuple[float, ...] = ()
    if 0.0 < M <= k_sup:
        a_hat = alpha
    if 1.0 < M <= k_sup:
        b_hat = 1.0 / M
    if M == 0.0:
        tangency = (alpha / 2.0,)
    elif M == k_sup:
        tangency = (alpha,)
    cross = tuple(t for t in (a_hat, b_hat) if t is not None and k_inf < M < k_sup)
    return KProfile(k_sup, k_inf, a_hat, b_hat, tangency, "var_profile", cross)


def _tvar_profile(alpha: float, M: float) -> KProfile:
    # K = 1/alpha on (0, alpha), 1/t on [alpha, 1)
    k_sup, k_inf = 1.0 / alpha, 1.0
    b_hat = 1.0 / M if 1.0 < M < k_sup else None
    tangency = (alpha / 2.0,) if M == k_sup else ()
    cross = (b_hat,) if b_hat is not None else ()
    return KProfile(k_sup, k_inf, None, b_hat, tangency, "tvar_profile", cross)


def _sign(k: float, M: float) -> int:
    if math.isnan(k):
        return 2
    if abs(k - M) <= TANGENCY_TOL * max(1.0, abs(M)) and math.isfinite(k):
        return 0
    return 1 if k > M else -1


def _bisect(ga, gc, M, lo, hi, s_lo) -> float:
    # K - M has sign s_lo at lo and differs at hi
    while hi - lo > ROOT_TOL:
        mid = 0.5 * (lo + hi)
        s = _sign(k_ratio(ga, gc, mid), M)
        if s == s_lo or s == 2:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _scan_profile(ga: DistortionFunction, gc: DistortionFunction, M: float) -> KProfile:
    ts = np.linspace(SCAN_EPS, 1.0 - SCAN_EPS, SCAN_POINTS)
    ks = np.array([k_ratio(ga, gc, float(t)) for t in ts])
    bad = np.isnan(ks)
    if bad.mean() > INDETERMINATE_SHARE:
        raise ProfileIndeterminate(
            f"K = g_alpha/g_gamma is 0/0 on {bad.mean():.1%} of (0, 1); the profile is undefined there"
        )
    good_t, good_k = ts[~bad], ks[~bad]
    k_sup, k_inf = float(good_k.max()), float(good_k.min())
    signs = [_sign(float(k), M) for k in good_k]
    tangency = tuple(float(t) for t, s in zip(good_t, signs) if s == 0)
    # sign changes between strict signs, skipping exact touches
    crossings = []
    prev_i = None
    for i, s in enumerate(signs):
        if s == 0:
            continue
        if prev_i is not None and signs[prev_i] != s:
            crossings.append(_bisect(ga, gc, M, float(good_t[prev_i]), float(good_t[i]), signs[prev_i]))
        prev_i = i
    if len(crossings) > 2:
        raise UnsupportedShape(f"K crosses M={M:g} {len(crossings)} times; at most two crossings are supported")
    strict = [s for s in signs if s != 0]
    reaches = any(s > 0 for s in strict) or bool(tangency)
    a_hat = b_hat = None
    if strict and reaches and strict[0] < 0:
        a_hat = crossings[0] if crossings else tangency[0]
    if strict and reaches and strict[-1] < 0:
        b_hat = crossings[-1] if crossings else tangency[-1]
    if tangency:
        tangency = (tangency[0], tangency[-1]) if len(tangency) > 1 else tangency
    shape = "scanned"
    if len(crossings) == 2 and not (a_hat is not None and b_hat is not None):
        # K above M at both ends with a dip in between
        shape = "valley"
    return KProfile(k_sup, k_inf, a_hat, b_hat, tangency, shape, tuple(crossings))


def h_sign(spec: ProblemSpec, consts: LagrangianConstants, x: float) -> float:
    """``H(x) = m2 g_a(S(x)) - m3 g_c(S(x))``."""
    s = spec.dist.sf1(x)
    return consts.m2 * spec.g_alpha.g1(s) - consts.m3 * spec.g_gamma.g1(s)


def case_f_lp(A: float, B: float) -> tuple[float, float]:
    """Maximize ``c1 A + c2 B`` over ``c1, c2 >= 0``, ``c1 + c2 <= 1``.

    ``A`` is the gain of full cession, ``B`` that of the stop-loss at
    ``S^-1(a_hat)``.  The optimum sits at a vertex; ties go to the larger
    ``c2``.
    """
    vertices = ((0.0, 1.0), (1.0, 0.0), (0.0, 0.0))
    best = max(vertices, key=lambda v: (v[0] * A + v[1] * B, v[1]))
    return best


@dataclass(frozen=True)
class SolutionReport:
    """Optimal contract with the geometry that selected it."""

    constants: LagrangianConstants
    profile: KProfile | None
    case_label: CaseLabel
    f_star: CededContract
    objective: float
    degenerate: bool = False
    note: str = ""
    case_f_coeffs: tuple[float, float] | None = None

    @property
    def retention(self) -> float | None:
        if self.f_star.n == 1:
            return self.f_star.terms[0][1]
        return None

    def to_dict(self) -> dict:
        return {
            "constants": self.constants.to_dict(),
            "profile": None if self.profile is None else self.profile.to_dict(),
            "case_label": self.case_label.value,
            "f_star": self.f_star.to_list(),
            "objective": self.objective,
            "degenerate": self.degenerate,
            "note": self.note,
            "case_f_coeffs": None if self.case_f_coeffs is None else list(self.case_f_coeffs),
        }

    def to_json(self, **kwargs: Any) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _report(spec, k, profile, label, h, degenerate=False, note="", coeffs=None) -> SolutionReport:
    return SolutionReport(k, profile, label, h, objective_direct(spec, h), degenerate, note, coeffs)


def _phi(spec: ProblemSpec, k: LagrangianConstants, d: float) -> float:
    """Gain ``m2 T_a(d) - m3 T_c(d)`` of the stop-loss at ``d``."""
    out = 0.0
    if k.m2:
        out += k.m2 * tail_risk(spec.g_alpha, spec.dist, d).value
    if k.m3:
        out -= k.m3 * tail_risk(spec.g_gamma, spec.dist, d).value
    return out


def _retention(spec: ProblemSpec, t: float) -> float:
    return spec.dist.q1(t)


def solve(spec: ProblemSpec, scan: bool = False) -> SolutionReport:
    """Optimal contract for the Lagrangian objective of ``spec``.

    Args:
        spec: Problem with multipliers fixed.
        scan: Force the numerical ``K`` scan even when a closed-form profile
            is available.

    Raises:
        ProfileIndeterminate: ``K`` is 0/0 on too much of (0, 1).
        UnsupportedShape: ``K`` crosses ``M`` more than twice.
    """
    k = constants(spec)
    if k.m2 == 0.0:
        # m3 = (1 + rho) l3 >= 0 here, so ceding never helps
        if k.m3 == 0.0:
            return _report(
                spec, k, None, CaseLabel.DEGENERATE, CededContract.null(), True,
                "m2 = m3 = 0: objective is constant over the class; the null contract is one optimum",
            )
        return _report(spec, k, None, CaseLabel.M2_ZERO, CededContract.null())

    M = k.M
    prof = k_profile(spec.g_alpha, spec.g_gamma, M, scan=scan)
    pos = k.m2 > 0
    full, null = CededContract.full(), CededContract.null()
    coeffs = None
    notes = []

    if M <= prof.k_inf:
        label = CaseLabel.M_LE_KINF
        h = full if pos else null
        if M == prof.k_inf:
            notes.append("M equals the infimum of K")
    elif M >= prof.k_sup:
        label = CaseLabel.M_GE_KSUP
        h = null if pos else full
        if M == prof.k_sup:
            notes.append("M equals the supremum of K")
    elif prof.shape == "valley":
        h = _best_candidate(spec, k, prof).f_star
        label = _valley_label(h, pos)
        notes.append("K dips below M between two regions above it; contract chosen by direct comparison")
    else:
        a, b = prof.a_hat, prof.b_hat
        if pos:
            # H > 0 exactly where K > M
            sl_b = CededContract.stop_loss(_retention(spec, b)) if b is not None else full
            if a is None or _phi(spec, k, sl_b.terms[0][1]) > 0.0:
                label, h = CaseLabel.B, sl_b
            else:
                label, h = CaseLabel.A, null
        else:
            if a is not None and b is not None:
                d_a = _retention(spec, a)
                coeffs = case_f_lp(_phi(spec, k, 0.0), _phi(spec, k, d_a))
                c1, c2 = coeffs
                h = CededContract(((c1, 0.0), (c2, d_a)))
                label = CaseLabel.F
            elif a is not None:
                label, h = CaseLabel.A, CededContract.stop_loss(_retention(spec, a))
            else:
                gain = _phi(spec, k, 0.0)
                label, h = (CaseLabel.C, full) if gain > 0.0 else (CaseLabel.B, null)

    degenerate = bool(prof.tangency_points)
    if degenerate:
        notes.append(f"K touches M on part of (0, 1); H vanishes there and the optimum is not unique")

    report = _report(spec, k, prof, label, h, degenerate, "; ".join(notes), coeffs)
    best = _best_candidate(spec, k, prof)
    if best.objective < report.objective - RESCUE_TOL * (1.0 + abs(report.objective)):
        note = "; ".join(notes + [f"case contract {h.describe()} was beaten by {best.f_star.describe()}"])
        return SolutionReport(k, prof, label, best.f_star, best.objective, degenerate, note, coeffs)
    return report


def _valley_label(h: CededContract, pos: bool) -> CaseLabel:
    # name the case whose prescribed contract has the same form
    if h.is_null:
        return CaseLabel.A if pos else CaseLabel.B
    if h.terms[0][1] == 0.0:
        return CaseLabel.C
    return CaseLabel.B if pos else CaseLabel.A


@dataclass(frozen=True)
class _Candidate:
    f_star: CededContract
    objective: float


def _best_candidate(spec: ProblemSpec, k: LagrangianConstants, prof: KProfile) -> _Candidate:
    base = k.m1 * distortion_risk(spec.g_alpha, spec.dist).value - k.D
    options = [CededContract.null(), CededContract.full()]
    for t in set(prof.crossings) | {p for p in (prof.a_hat, prof.b_hat) if p is not None}:
        options.append(CededContract.stop_loss(_retention(spec, t)))
    scored = []
    for h in options:
        gain = 0.0 if h.is_null else _phi(spec, k, h.terms[0][1])
        scored.append((base - gain, h.n, h))
    value, _, h = min(scored, key=lambda s: (s[0], s[1]))
    return _Candidate(h, objective_direct(spec, h))


def beta_for_threshold(spec: ProblemSpec, target_M: float, lo: float = 0.0, hi: float = 1.0) -> float:
    """The ``beta`` in ``[lo, hi]`` at which ``M = m3/m2`` equals ``target_M``.

    ``M`` is a ratio of affine functions of ``beta``, so the root is solved
    in closed form and then checked against the bracket.
    """
    l1, l2, l3 = spec.lambdas
    r = 1.0 + spec.loading
    # r (2b - 1 + l1 - l2 + l3) = T (2b - 1 + l1 - l2)
    c0 = -1.0 + l1 - l2
    denom = 2.0 * (r - target_M)
    if denom == 0.0:
        raise ValueError("M does not depend on beta for this loading and target")
    beta = (target_M * c0 - r * (c0 + l3)) / denom
    if not lo <= beta <= hi:
        raise ValueError(f"M never reaches {target_M} for beta in [{lo}, {hi}]")
    return beta
