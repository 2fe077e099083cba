"""Ground-up loss distributions and the inverse-transform sampler.

Every distribution exposes its survival function ``sf``, the generalized
inverse ``quantile(t) = inf{x >= 0 : S(x) <= t}`` (the VaR convention), the
left-limit inverse ``quantile_left(t) = inf{x : S(x) < t}`` and the stop-loss
transform ``E[(X - d)+]``.  Continuous families coincide on both inverses;
the empirical family does not at atoms.
"""

from __future__ import annotations

import math
from typing import Any, Mapping

import numpy as np
from scipy import special

from .errors import InvalidParameter

KINDS = ("exponential", "pareto", "lognormal", "empirical")

# nt within this distance of an integer is treated as that integer
_GRID_SNAP = 1e-9


class LossDistribution:
    """A nonnegative loss X with 0 < E[X] < inf.

    Use the factory functions (:func:`exponential`, :func:`pareto`,
    :func:`lognormal`, :func:`empirical`) or :meth:`from_dict` rather than
    calling the constructor directly.

    ``pareto`` is the Lomax (Pareto II) law ``S(x) = (scale / (scale + x))**shape``
    so that the support starts at zero.
    """

    def __init__(self, kind: str, params: Mapping[str, Any]):
        if kind not in KINDS:
            raise InvalidParameter(f"unknown distribution kind {kind!r}")
        self.kind = kind
        if kind == "exponential":
            rate = float(params["rate"])
            if not (rate > 0 and math.isfinite(rate)):
                raise InvalidParameter("exponential rate must be positive")
            self._p = {"rate": rate}
        elif kind == "pareto":
            shape, scale = float(params["shape"]), float(params["scale"])
            if not shape > 1:
                raise InvalidParameter("pareto shape must exceed 1 for a finite mean")
            if not scale > 0:
                raise InvalidParameter("pareto scale must be positive")
            self._p = {"shape": shape, "scale": scale}
        elif kind == "lognormal":
            mu, sigma = float(params["mu"]), float(params["sigma"])
            if not sigma > 0:
                raise InvalidParameter("lognormal sigma must be positive")
            self._p = {"mu": mu, "sigma": sigma}
        else:
            xs = np.sort(np.asarray(params["sample"], dtype=float).ravel())
            if xs.size == 0:
                raise InvalidParameter("empirical sample is empty")
            if not np.all(np.isfinite(xs)) or xs[0] < 0:
                raise InvalidParameter("empirical sample must be finite and nonnegative")
            self._xs = xs
            self._p = {"sample": xs}
        m = self.mean()
        if not (m > 0 and math.isfinite(m)):
            raise InvalidParameter("loss distribution needs 0 < E[X] < inf")

    # -- scalar/vector evaluation -------------------------------------------------

    @property
    def params(self) -> dict:
        if self.kind == "empirical":
            return {"sample": self._xs.tolist()}
        return dict(self._p)

    @property
    def is_discrete(self) -> bool:
        return self.kind == "empirical"

    @property
    def support_sup(self) -> float:
        """Supremum of the support (``inf`` for the parametric families)."""
        if self.kind == "empirical":
            return float(self._xs[-1])
        return math.inf

    @property
    def sample_values(self) -> np.ndarray:
        if self.kind != "empirical":
            raise AttributeError("only empirical distributions carry a sample")
        return self._xs

    def sf1(self, x: float) -> float:
        """Survival function at a single point (fast path used inside quadrature)."""
        if x < 0:
            return 1.0
        k = self.kind
        if k == "exponential":
            return math.exp(-self._p["rate"] * x)
        if k == "pareto":
            s = self._p["scale"]
            return (s / (s + x)) ** self._p["shape"]
        if k == "lognormal":
            if x == 0:
                return 1.0
            return float(special.ndtr((self._p["mu"] - math.log(x)) / self._p["sigma"]))
        n = self._xs.size
        return (n - int(np.searchsorted(self._xs, x, side="right"))) / n

    def sf(self, x):
        """S(x) = P(X > x), vectorized over ``x``."""
        if np.isscalar(x):
            return self.sf1(float(x))
        x = np.asarray(x, dtype=float)
        k = self.kind
        with np.errstate(divide="ignore"):
            if k == "exponential":
                out = np.exp(-self._p["rate"] * np.maximum(x, 0.0))
            elif k == "pareto":
                s = self._p["scale"]
                out = (s / (s + np.maximum(x, 0.0))) ** self._p["shape"]
            elif k == "lognormal":
                z = (self._p["mu"] - np.log(np.maximum(x, 0.0))) / self._p["sigma"]
                out = special.ndtr(z)
            else:
                n = self._xs.size
                out = (n - np.searchsorted(self._xs, x, side="right")) / n
        return np.where(x < 0, 1.0, out)

    def q1(self, t: float) -> float:
        """``inf{x >= 0 : S(x) <= t}`` at a single level."""
        if t >= 1.0:
            return 0.0
        k = self.kind
        if k == "empirical":
            return self._emp_quantile(t, left=False)
        if t <= 0.0:
            return math.inf
        if k == "exponential":
            return -math.log(t) / self._p["rate"]
        if k == "pareto":
            s = self._p["scale"]
            return s * (t ** (-1.0 / self._p["shape"]) - 1.0)
        return math.exp(self._p["mu"] - self._p["sigma"] * float(special.ndtri(t)))

    def quantile(self, t):
        """Generalized inverse ``inf{x >= 0 : S(x) <= t}``; this is VaR at level t."""
        if np.isscalar(t):
            return self.q1(float(t))
        return np.array([self.q1(float(v)) for v in np.ravel(t)]).reshape(np.shape(t))

    def quantile_left(self, t: float) -> float:
        """``inf{x : S(x) < t}``, the left limit of :meth:`quantile` in ``t``.

        This is the length of ``{x >= 0 : S(x) >= t}`` and is the value a
        distortion jump at ``t`` picks up.
        """
        if self.kind == "empirical":
            return self._emp_quantile(float(t), left=True)
        return self.q1(float(t))

    def _emp_quantile(self, t: float, left: bool) -> float:
        xs = self._xs
        n = xs.size
        nt = n * t
        r = round(nt)
        near = abs(nt - r) <= _GRID_SNAP * max(1.0, nt)
        if left:
            if t <= 0:
                return float(xs[-1])
            k = (int(r) if near else math.ceil(nt)) - 1
        else:
            k = int(r) if near else math.floor(nt)
        if k >= n:
            return 0.0 if not left else float(xs[0])
        return float(xs[n - k - 1])

    # -- moments -------------------------------------------------------------------

    def mean(self) -> float:
        k = self.kind
        if k == "exponential":
            return 1.0 / self._p["rate"]
        if k == "pareto":
            return self._p["scale"] / (self._p["shape"] - 1.0)
        if k == "lognormal":
            return math.exp(self._p["mu"] + 0.5 * self._p["sigma"] ** 2)
        return float(self._xs.mean())

    def stop_loss(self, d: float) -> float:
        """``E[(X - d)+]`` in closed form."""
        d = max(float(d), 0.0)
        k = self.kind
        if k == "exponential":
            return math.exp(-self._p["rate"] * d) / self._p["rate"]
        if k == "pareto":
            a, s = self._p["shape"], self._p["scale"]
            return (s + d) / (a - 1.0) * self.sf1(d)
        if k == "lognormal":
            mu, sig = self._p["mu"], self._p["sigma"]
            if d == 0:
                return self.mean()
            d2 = (mu - math.log(d)) / sig
            return self.mean() * float(special.ndtr(d2 + sig)) - d * float(special.ndtr(d2))
        return float(np.maximum(self._xs - d, 0.0).mean())

    def tail_cutoff(self, eps: float) -> float:
        """Truncation point ``min(S^-1(eps), sup support)`` used by the integrators."""
        return min(self.q1(eps), self.support_sup)

    # -- transforms / serialization ------------------------------------------------

    def scaled(self, c: float) -> "LossDistribution":
        """Distribution of ``c * X`` for ``c > 0``."""
        if not c > 0:
            raise InvalidParameter("scale factor must be positive")
        k = self.kind
        if k == "exponential":
            return LossDistribution(k, {"rate": self._p["rate"] / c})
        if k == "pareto":
            return LossDistribution(k, {"shape": self._p["shape"], "scale": self._p["scale"] * c})
        if k == "lognormal":
            return LossDistribution(k, {"mu": self._p["mu"] + math.log(c), "sigma": self._p["sigma"]})
        return LossDistribution(k, {"sample": self._xs * c})

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LossDistribution":
        try:
            kind, params = data["kind"], data["params"]
        except (KeyError, TypeError) as exc:
            raise InvalidParameter(f"distribution spec needs 'kind' and 'params': {exc}") from None
        try:
            return cls(kind, params)
        except KeyError as exc:
            raise InvalidParameter(f"{kind} distribution is missing parameter {exc}") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LossDistribution) or other.kind != self.kind:
            return NotImplemented
        if self.kind == "empirical":
            return bool(np.array_equal(self._xs, other._xs))
        return self._p == other._p

    def __hash__(self) -> int:
        if self.kind == "empirical":
            return hash((self.kind, self._xs.tobytes()))
        return hash((self.kind, tuple(sorted(self._p.items()))))

    def __repr__(self) -> str:
        if self.kind == "empirical":
            return f"LossDistribution('empirical', n={self._xs.size})"
        return f"LossDistribution({self.kind!r}, {self._p})"


def exponential(rate: float) -> LossDistribution:
    return LossDistribution("exponential", {"rate": rate})


def pareto(shape: float, scale: float) -> LossDistribution:
    return LossDistribution("pareto", {"shape": shape, "scale": scale})


def lognormal(mu: float, sigma: float) -> LossDistribution:
    return LossDistribution("lognormal", {"mu": mu, "sigma": sigma})


def empirical(sample) -> LossDistribution:
    return LossDistribution("empirical", {"sample": sample})


def draw_losses(dist: LossDistribution, count: int, seed: int) -> np.ndarray:
    """Unsorted inverse-transform draw, in generation order."""
    if count < 1:
        raise InvalidParameter("count must be at least 1")
    rng = np.random.default_rng(seed)
    # 1 - U lies in (0, 1], so every level maps to a finite quantile
    levels = 1.0 - rng.random(count)
    k = dist.kind
    if k == "exponential":
        return -np.log(levels) / dist.params["rate"]
    if k == "pareto":
        p = dist.params
        return p["scale"] * (levels ** (-1.0 / p["shape"]) - 1.0)
    if k == "lognormal":
        p = dist.params
        return np.exp(p["mu"] - p["sigma"] * special.ndtri(levels))
    xs = dist.sample_values
    n = xs.size
    nt = n * levels
    k_idx = np.floor(nt + _GRID_SNAP).astype(np.int64)
    out = np.zeros(count)
    inside = k_idx < n
    out[inside] = xs[n - k_idx[inside] - 1]
    return out


def sample_losses(dist: LossDistribution, count: int, seed: int) -> np.ndarray:
    """Deterministic sorted sample of ``count`` losses drawn as ``S^-1(U)``.

    Args:
        dist: Loss distribution to sample.
        count: Number of draws, at least 1.
        seed: Seed for :func:`numpy.random.default_rng`.

    Returns:
        Ascending array of losses; identical for identical ``(seed, count)``.
    """
    return np.sort(draw_losses(dist, count, seed))
