"""Piecewise-linear ceded-loss functions ``h(x) = sum_j C_j (x - d_j)+``."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameter

SLOPE_DUST = 1e-12


@dataclass(frozen=True)
class CededContract:
    """Increasing, convex, 1-Lipschitz ceded loss with ``h(0) = 0``.

    Attributes:
        terms: ``(slope, retention)`` pairs sorted by retention.  Slopes are
            nonnegative and sum to at most one.
    """

    terms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        cleaned = []
        for c, d in self.terms:
            c, d = float(c), float(d)
            if not (math.isfinite(c) and math.isfinite(d)):
                raise InvalidParameter("contract terms must be finite")
            if c < 0:
                raise InvalidParameter(f"slope increments must be nonnegative, got {c}")
            if d < 0:
                raise InvalidParameter(f"retentions must be nonnegative, got {d}")
            if c > 0:
                cleaned.append((c, d))
        cleaned.sort(key=lambda p: p[1])
        total = math.fsum(c for c, _ in cleaned)
        if total > 1.0 + SLOPE_DUST:
            raise InvalidParameter(f"slopes sum to {total} > 1")
        object.__setattr__(self, "terms", tuple(cleaned))

    @classmethod
    def null(cls) -> "CededContract":
        return cls(())

    @classmethod
    def full(cls) -> "CededContract":
        return cls(((1.0, 0.0),))

    @classmethod
    def stop_loss(cls, retention: float, slope: float = 1.0) -> "CededContract":
        return cls(((slope, retention),))

    @classmethod
    def from_layers(cls, slopes: Sequence[float], retentions: Sequence[float]) -> "CededContract":
        if len(slopes) != len(retentions):
            raise InvalidParameter("slopes and retentions differ in length")
        return cls(tuple(zip(slopes, retentions)))

    @property
    def n(self) -> int:
        return len(self.terms)

    @property
    def slopes(self) -> tuple[float, ...]:
        return tuple(c for c, _ in self.terms)

    @property
    def retentions(self) -> tuple[float, ...]:
        return tuple(d for _, d in self.terms)

    @property
    def total_slope(self) -> float:
        return math.fsum(self.slopes)

    @property
    def is_null(self) -> bool:
        return not self.terms

    @property
    def kinks(self) -> tuple[float, ...]:
        return tuple(sorted({d for _, d in self.terms if d > 0}))

    def __call__(self, x):
        """``h(x)``; accepts scalars or arrays."""
        if np.isscalar(x):
            x = float(x)
            return math.fsum(c * max(x - d, 0.0) for c, d in self.terms)
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for c, d in self.terms:
            out += c * np.maximum(x - d, 0.0)
        return out

    def retained(self, x):
        """``x - h(x)``."""
        return x - self(x)

    def slope_after(self, x: float) -> float:
        """Right derivative of ``h`` at ``x``."""
        return math.fsum(c for c, d in self.terms if d <= x)

    def describe(self) -> str:
        if self.is_null:
            return "no reinsurance"
        if self.n == 1:
            c, d = self.terms[0]
            if d == 0:
                return "full cession" if abs(c - 1) <= SLOPE_DUST else f"quota share {c:g}"
            if abs(c - 1) <= SLOPE_DUST:
                return f"stop-loss at {d:.6g}"
            return f"change-loss {c:g} above {d:.6g}"
        return " + ".join(f"{c:g}*(x-{d:.6g})+" for c, d in self.terms)

    def to_list(self) -> list[dict]:
        return [{"slope": c, "retention": d} for c, d in self.terms]

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_list(cls, items: Iterable[dict]) -> "CededContract":
        try:
            return cls(tuple((float(it["slope"]), float(it["retention"])) for it in items))
        except (KeyError, TypeError) as exc:
            raise InvalidParameter(f"contract terms need 'slope' and 'retention': {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "CededContract":
        return cls.from_list(json.loads(text))


def contract_eval(h: CededContract, x: float) -> float:
    """Ceded amount ``h(x)`` for a single loss ``x >= 0``."""
    if x < 0:
        raise InvalidParameter("loss must be nonnegative")
    return h(float(x))
