"""Distortion functions, distortion risk measures and distortion premiums.

A distortion risk measure is evaluated two ways:

* the survival form ``int_0^inf g(S(x)) dx`` (:func:`distortion_risk`,
  :func:`tail_risk`), and
* the quantile form ``int_0^1 S^-1(t) dg(t)`` as a Stieltjes integral
  (:func:`distortion_risk_quantile_form`, :func:`quantile_stieltjes`).

Both truncate the loss at ``x_max = S^-1(TAIL_EPS)``.  Truncating the
survival integral at ``x_max`` is the same as replacing the quantile by
``min(S^-1(t), x_max)``, so the two routes compute the same number and can
be compared to quadrature precision.
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import integrate

from .errors import DivergentIntegral, InvalidParameter, NonMonotoneTable, NumericalFailure
from .losses import LossDistribution

TAIL_EPS = 1e-12
QUAD_EPSABS = 1e-9
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200
FD_STEP = 1e-7
# decade breakpoints keep panels well scaled for heavy tails
_DECADES = tuple(10.0 ** -k for k in range(1, 12))


class DistortionKind(str, Enum):
    IDENTITY = "identity"
    VAR_STEP = "var_step"
    TVAR = "tvar"
    PROPORTIONAL_HAZARD = "proportional_hazard"
    CUSTOM_TABLE = "custom_table"


@dataclass(frozen=True)
class RiskValue:
    """A monetary value together with an absolute error estimate."""

    value: float
    abs_error_estimate: float = 0.0

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise InvalidParameter("abs_error_estimate must be nonnegative")

    def __float__(self) -> float:
        return float(self.value)

    def scaled(self, c: float) -> "RiskValue":
        return RiskValue(c * self.value, abs(c) * self.abs_error_estimate)

    def __add__(self, other: "RiskValue") -> "RiskValue":
        return RiskValue(self.value + other.value, self.abs_error_estimate + other.abs_error_estimate)

    def __sub__(self, other: "RiskValue") -> "RiskValue":
        return RiskValue(self.value - other.value, self.abs_error_estimate + other.abs_error_estimate)


@dataclass(frozen=True)
class DistortionFunction:
    """Nondecreasing, right-continuous ``g: [0, 1] -> [0, 1]`` with ``g(0)=0, g(1)=1``.

    Build instances with :func:`make_distortion`.
    """

    kind: DistortionKind
    level: float | None = None
    exponent: float | None = None
    knots: tuple[tuple[float, float], ...] | None = None
    discontinuities: tuple[float, ...] = ()
    concave_hint: str = "unknown"

    @property
    def params(self) -> dict:
        if self.kind in (DistortionKind.VAR_STEP, DistortionKind.TVAR):
            return {"level": self.level}
        if self.kind is DistortionKind.PROPORTIONAL_HAZARD:
            return {"exponent": self.exponent}
        if self.kind is DistortionKind.CUSTOM_TABLE:
            return {"knots": [list(k) for k in self.knots]}
        return {}

    @property
    def jumps(self) -> tuple[tuple[float, float], ...]:
        """``(t, g(t) - g(t-))`` for every jump in (0, 1)."""
        if self.kind is DistortionKind.VAR_STEP:
            return ((self.level, 1.0),)
        return ()

    @property
    def kinks(self) -> tuple[float, ...]:
        """Interior points where ``g`` or its derivative is discontinuous."""
        if self.kind in (DistortionKind.VAR_STEP, DistortionKind.TVAR):
            return (self.level,)
        if self.kind is DistortionKind.CUSTOM_TABLE:
            return tuple(t for t, _ in self.knots[1:-1])
        return ()

    def g1(self, t: float) -> float:
        """Scalar evaluation, clamped to [0, 1]."""
        if t <= 0.0:
            return 0.0
        if t >= 1.0:
            return 1.0
        k = self.kind
        if k is DistortionKind.IDENTITY:
            return t
        if k is DistortionKind.VAR_STEP:
            return 1.0 if t >= self.level else 0.0
        if k is DistortionKind.TVAR:
            return t / self.level if t < self.level else 1.0
        if k is DistortionKind.PROPORTIONAL_HAZARD:
            return t ** self.exponent
        ts = self._knot_t
        i = bisect.bisect_right(ts, t) - 1
        (t0, y0), (t1, y1) = self.knots[i], self.knots[i + 1]
        return y0 + (y1 - y0) * (t - t0) / (t1 - t0)

    def __call__(self, t):
        if isinstance(t, (float, int)):
            return self.g1(float(t))
        t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        k = self.kind
        if k is DistortionKind.IDENTITY:
            return t.copy()
        if k is DistortionKind.VAR_STEP:
            return np.where(t >= self.level, 1.0, 0.0)
        if k is DistortionKind.TVAR:
            return np.minimum(t / self.level, 1.0)
        if k is DistortionKind.PROPORTIONAL_HAZARD:
            return t ** self.exponent
        ts, ys = zip(*self.knots)
        return np.interp(t, ts, ys)

    @property
    def _knot_t(self) -> list[float]:
        return [t for t, _ in self.knots]

    def density(self, t: float) -> float:
        """Derivative of the absolutely continuous part of ``g`` at ``t`` in (0, 1)."""
        k = self.kind
        if k is DistortionKind.IDENTITY:
            return 1.0
        if k is DistortionKind.VAR_STEP:
            return 0.0
        if k is DistortionKind.TVAR:
            return 1.0 / self.level if t < self.level else 0.0
        if k is DistortionKind.PROPORTIONAL_HAZARD:
            return self.exponent * t ** (self.exponent - 1.0)
        return self._fd_density(t)

    def _fd_density(self, t: float) -> float:
        h = FD_STEP
        lo, hi = max(t - h, 0.0), min(t + h, 1.0)
        ts = self._knot_t
        # one-sided away from a knot so the difference stays inside one segment
        i = bisect.bisect_left(ts, lo)
        knot_inside = i < len(ts) and ts[i] <= hi and 0.0 < ts[i] < 1.0
        if knot_inside:
            knot = ts[i]
            if knot > t:
                lo, hi = max(t - h, 0.0), t
            else:
                lo, hi = t, min(t + h, 1.0)
        if hi <= lo:
            return 0.0
        return (self.g1(hi) - self.g1(lo)) / (hi - lo)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "params": self.params}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DistortionFunction":
        try:
            return make_distortion(data["kind"], data.get("params") or {})
        except (KeyError, TypeError) as exc:
            raise InvalidParameter(f"bad distortion spec: {exc}") from None


def make_distortion(kind: str | DistortionKind, params: Mapping[str, Any] | None = None) -> DistortionFunction:
    """Build a validated distortion function.

    Args:
        kind: One of ``identity``, ``var_step``, ``tvar``,
            ``proportional_hazard`` or ``custom_table``.
        params: ``{"level": a}`` for the step and TVaR distortions,
            ``{"exponent": c}`` for ``g(t) = t**c``, ``{"knots": [[t, g], ...]}``
            for a piecewise-linear table.

    Raises:
        InvalidParameter: a level outside (0, 1), a nonpositive exponent or a
            malformed table.
        NonMonotoneTable: table values decrease.
    """
    try:
        kind = DistortionKind(kind)
    except ValueError:
        raise InvalidParameter(f"unknown distortion kind {kind!r}") from None
    params = dict(params or {})
    if kind is DistortionKind.IDENTITY:
        return DistortionFunction(kind, concave_hint="concave")
    if kind in (DistortionKind.VAR_STEP, DistortionKind.TVAR):
        if "level" not in params:
            raise InvalidParameter(f"{kind.value} needs a 'level'")
        level = float(params["level"])
        if not 0.0 < level < 1.0:
            raise InvalidParameter(f"level must lie in (0, 1), got {level}")
        if kind is DistortionKind.VAR_STEP:
            return DistortionFunction(kind, level=level, discontinuities=(level,), concave_hint="not_concave")
        return DistortionFunction(kind, level=level, concave_hint="concave")
    if kind is DistortionKind.PROPORTIONAL_HAZARD:
        if "exponent" not in params:
            raise InvalidParameter("proportional_hazard needs an 'exponent'")
        c = float(params["exponent"])
        if not (c > 0 and math.isfinite(c)):
            raise InvalidParameter(f"exponent must be positive, got {c}")
        return DistortionFunction(kind, exponent=c, concave_hint="concave" if c <= 1 else "not_concave")
    knots = params.get("knots")
    if not knots or len(knots) < 2:
        raise InvalidParameter("custom_table needs at least two knots")
    pts = tuple((float(t), float(y)) for t, y in knots)
    ts = [t for t, _ in pts]
    ys = [y for _, y in pts]
    if ts[0] != 0.0 or ts[-1] != 1.0 or ys[0] != 0.0 or ys[-1] != 1.0:
        raise InvalidParameter("custom_table must start at (0, 0) and end at (1, 1)")
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise InvalidParameter("custom_table knot abscissae must be strictly increasing")
    if any(b < a for a, b in zip(ys, ys[1:])):
        raise NonMonotoneTable("custom_table values must be nondecreasing")
    slopes = [(y1 - y0) / (t1 - t0) for (t0, y0), (t1, y1) in zip(pts, pts[1:])]
    concave = all(b <= a + 1e-12 for a, b in zip(slopes, slopes[1:]))
    return DistortionFunction(kind, knots=pts, concave_hint="concave" if concave else "not_concave")


def identity() -> DistortionFunction:
    return make_distortion("identity")


def var_step(level: float) -> DistortionFunction:
    return make_distortion("var_step", {"level": level})


def tvar(level: float) -> DistortionFunction:
    return make_distortion("tvar", {"level": level})


def proportional_hazard(exponent: float) -> DistortionFunction:
    return make_distortion("proportional_hazard", {"exponent": exponent})


# ---------------------------------------------------------------------------
# quadrature helpers
# ---------------------------------------------------------------------------


def _quad(f: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(f, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT, full_output=1)
    val, err = out[0], out[1]
    if not math.isfinite(val) or err > 1e-4 * (1.0 + abs(val)):
        raise NumericalFailure(f"quadrature on [{a}, {b}] stalled: value {val}, error {err}")
    return val, err


def _panels(lo: float, hi: float, points: Iterable[float]) -> list[tuple[float, float]]:
    cuts = sorted({lo, hi, *(p for p in points if lo < p < hi)})
    return list(zip(cuts, cuts[1:]))


def _check_tail(g: DistortionFunction, dist: LossDistribution) -> None:
    # x * g(S(x)) must decay for the integral to converge
    x1 = dist.q1(1e-9)
    x2 = dist.q1(TAIL_EPS)
    r1 = x1 * g.g1(dist.sf1(x1))
    r2 = x2 * g.g1(dist.sf1(x2))
    if r2 > 0 and r2 >= r1:
        raise DivergentIntegral(
            f"{g.kind.value} distortion of {dist.kind} tail does not decay (x*g(S(x)): {r1:.3g} -> {r2:.3g})"
        )


def _tail_estimate(g: DistortionFunction, dist: LossDistribution, xmax: float) -> float:
    s = dist.sf1(xmax)
    if dist.is_discrete or s <= 0:
        return 0.0
    return g.g1(TAIL_EPS) * dist.stop_loss(xmax) / s


def tail_risk(g: DistortionFunction, dist: LossDistribution, retention: float = 0.0) -> RiskValue:
    """Distorted stop-loss layer ``int_d^inf g(S(x)) dx``, i.e. ``rho_g((X - d)+)``.

    Retentions beyond the truncation point contribute zero.
    """
    d = max(float(retention), 0.0)
    if dist.is_discrete:
        return _empirical_tail(g, dist, d)
    _check_tail(g, dist)
    xmax = dist.tail_cutoff(TAIL_EPS)
    if d >= xmax:
        return RiskValue(0.0, _tail_estimate(g, dist, xmax))
    levels = list(g.discontinuities) + list(g.kinks) + list(_DECADES)
    points = [dist.q1(t) for t in levels]

    def f(x: float) -> float:
        return g.g1(dist.sf1(x))

    total, err = 0.0, 0.0
    for a, b in _panels(d, xmax, points):
        v, e = _quad(f, a, b)
        total += v
        err += e
    return RiskValue(total, err + _tail_estimate(g, dist, xmax))


def _empirical_tail(g: DistortionFunction, dist: LossDistribution, d: float) -> RiskValue:
    xs = dist.sample_values
    n = xs.size
    lefts = np.concatenate(([0.0], xs[:-1]))
    lengths = np.clip(xs - np.maximum(lefts, d), 0.0, None)
    heights = g(np.arange(n, 0, -1) / n)
    val = float(np.dot(lengths, heights))
    return RiskValue(val, 1e-13 * abs(val))


def distortion_risk(g: DistortionFunction, dist: LossDistribution) -> RiskValue:
    """``rho_g(X) = int_0^inf g(S_X(x)) dx`` by panelled adaptive quadrature.

    Jumps of ``g`` are mapped to loss levels ``S^-1(t)`` and used as panel
    boundaries.  The integral is truncated at ``S^-1(1e-12)``; the neglected
    tail is estimated as ``g(eps) * E[X - x_max | X > x_max]`` and folded into
    ``abs_error_estimate``.

    Raises:
        DivergentIntegral: ``x * g(S(x))`` does not decay in the far tail.
        NumericalFailure: quadrature could not converge on some panel.
    """
    return tail_risk(g, dist, 0.0)


def quantile_stieltjes(
    g: DistortionFunction,
    dist: LossDistribution,
    lo: float,
    hi: float,
    phi: Callable | None = None,
    x_kinks: Sequence[float] = (),
) -> RiskValue:
    """``int_(lo, hi] phi(min(S^-1(t), x_max)) dg(t)``.

    Jump terms are taken at the left-limit quantile; the absolutely
    continuous part is integrated against ``g'``.  ``phi`` must be
    nondecreasing and accept numpy arrays; ``x_kinks`` lists its kinks in loss
    units so they become panel boundaries.
    """
    lo, hi = max(float(lo), 0.0), min(float(hi), 1.0)
    if hi <= lo:
        return RiskValue(0.0, 0.0)
    if phi is None:
        phi = _identity_phi
    if dist.is_discrete:
        return _empirical_stieltjes(g, dist, lo, hi, phi)
    _check_tail(g, dist)
    xmax = dist.tail_cutoff(TAIL_EPS)
    eps = dist.sf1(xmax)
    total, err = 0.0, 0.0
    # on (0, eps] the truncated quantile is the constant x_max
    cut = min(hi, eps)
    if cut > lo:
        total += float(phi(xmax)) * (g.g1(cut) - g.g1(lo))
    start = max(lo, eps)
    if hi > start:
        for tau, mass in g.jumps:
            if start < tau <= hi:
                total += mass * float(phi(min(dist.quantile_left(tau), xmax)))
        t_points = list(g.kinks) + list(_DECADES) + [dist.sf1(x) for x in x_kinks]

        def f(t: float) -> float:
            dens = g.density(t)
            if dens == 0.0:
                return 0.0
            return float(phi(min(dist.q1(t), xmax))) * dens

        for a, b in _panels(start, hi, t_points):
            v, e = _quad(f, a, b)
            total += v
            err += e
    tail = _tail_estimate(g, dist, xmax) if lo <= eps else 0.0
    return RiskValue(total, err + tail)


def _identity_phi(x):
    return x


def _empirical_stieltjes(g, dist, lo, hi, phi) -> RiskValue:
    xs = dist.sample_values
    n = xs.size
    k = np.arange(1, n + 1)
    # on ((k-1)/n, k/n] the left-limit quantile is the k-th largest loss
    left = np.maximum((k - 1) / n, lo)
    right = np.minimum(k / n, hi)
    mass = np.where(right > left, g(right) - g(left), 0.0)
    vals = np.asarray(phi(xs[::-1]), dtype=float)
    val = float(np.dot(vals, mass))
    return RiskValue(val, 1e-13 * abs(val))


def distortion_risk_quantile_form(
    g: DistortionFunction,
    dist: LossDistribution,
    transform: Callable | None = None,
    x_kinks: Sequence[float] = (),
) -> RiskValue:
    """``int_0^1 VaR_t(phi(X)) dg(t)`` with ``phi`` nondecreasing (identity by default).

    Cross-check implementation of :func:`distortion_risk`; with ``transform``
    it evaluates the risk of an increasing function of ``X`` such as a
    retained loss ``x - h(x)``.
    """
    return quantile_stieltjes(g, dist, 0.0, 1.0, transform, x_kinks)


def distortion_premium(risk: RiskValue | float, loading: float) -> RiskValue:
    """``(1 + rho) * risk`` for a safety loading ``rho >= 0``."""
    if not loading >= 0:
        raise InvalidParameter(f"loading must be nonnegative, got {loading}")
    if not isinstance(risk, RiskValue):
        risk = RiskValue(float(risk), 0.0)
    return risk.scaled(1.0 + loading)
