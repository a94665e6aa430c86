"""Consistent scoring functions for joint (VaR, ES) forecasts.

A forecast is a pair (var, es) with var >= es, scored against a realized
return y at a tail level alpha (default 2.5%).  Two one-parameter families of
elementary scores span, via nonnegative mixtures, every normalized consistent
scoring function for the pair:

* ``elementary_score_var``  -- checks the quantile forecast alone,
* ``elementary_score_es``   -- checks the pair with emphasis on the ES
  component; this is the family behind Murphy diagrams for ES.

``fz_score`` evaluates a general family member specified by a pair of
increasing functions, and ``mixture_score`` evaluates a discrete mixture of
elementary scores.  The two representations agree exactly; tests rely on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

DEFAULT_ALPHA = 0.025


class ScoreFamily(Enum):
    """Which elementary-score family a threshold grid indexes."""

    VAR = "var"
    ES = "es"


def _require_level(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"tail level must lie strictly in (0, 1), got {alpha!r}")


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class JointForecast:
    """A (VaR, ES) pair in return units; the tail mean never exceeds the quantile."""

    var: float
    es: float

    def __post_init__(self) -> None:
        _require_finite(var=self.var, es=self.es)
        if self.var < self.es:
            raise ValueError(
                f"invalid joint forecast: var={self.var} < es={self.es}"
            )


@dataclass(frozen=True)
class ThresholdGrid:
    """Strictly increasing thresholds indexing one elementary-score family."""

    values: np.ndarray
    kind: ScoreFamily = ScoreFamily.ES

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("threshold grid must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(values)):
            raise ValueError("threshold grid must be finite")
        if values.size > 1 and not np.all(np.diff(values) > 0):
            raise ValueError("threshold grid must be strictly increasing")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class FzSpec:
    """A general consistent score, specified by its generating functions.

    ``g1`` must be nondecreasing, ``g2`` nondecreasing and nonnegative, and
    ``g2_antiderivative`` a primitive of ``g2``.  These conditions cannot be
    checked for arbitrary callables; tests probe them on sampled points.
    """

    g1: Callable[[float], float]
    g2: Callable[[float], float]
    g2_antiderivative: Callable[[float], float]


@dataclass(frozen=True)
class DiscreteMixture:
    """Finitely many thresholds with nonnegative weights.

    Represents a discretized mixing measure over elementary scores; an empty
    mixture scores everything as zero.
    """

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if values.shape != weights.shape or values.ndim != 1:
            raise ValueError("mixture values and weights must be 1-d and equal length")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(weights))):
            raise ValueError("mixture points must be finite")
        if np.any(weights < 0):
            raise ValueError("mixture weights must be nonnegative")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_pairs(cls, points: Sequence[tuple[float, float]]) -> "DiscreteMixture":
        if len(points) == 0:
            return cls(np.empty(0), np.empty(0))
        values, weights = zip(*points)
        return cls(np.asarray(values, dtype=float), np.asarray(weights, dtype=float))

    def as_fz_spec(self) -> FzSpec:
        """The equivalent general score: a step function and its ramp primitive.

        ``g2(x) = sum of weights at thresholds <= x`` and the antiderivative is
        the piecewise-linear ``sum_i w_i * max(0, x - v_i)``.
        """
        values, weights = self.values, self.weights

        def step(x: float) -> float:
            return float(weights[values <= x].sum())

        def ramp(x: float) -> float:
            return float((weights * np.maximum(0.0, x - values)).sum())

        return FzSpec(g1=lambda _: 0.0, g2=step, g2_antiderivative=ramp)


def elementary_score_var(x1: float, y: float, v: float, alpha: float = DEFAULT_ALPHA) -> float:
    """Elementary score of the quantile forecast ``x1`` at threshold ``v``.

    Always lies in [-1, 1] and vanishes once ``v`` leaves [min(x1, y), max(x1, y)].
    """
    _require_level(alpha)
    _require_finite(x1=x1, y=y, v=v)
    hit = 1.0 if y <= x1 else 0.0
    return (hit - alpha) * (float(v <= x1) - float(v <= y))


def tail_limit_score(x1: float, y: float, alpha: float = DEFAULT_ALPHA) -> float:
    """Limit of the ES-family elementary score as the threshold goes to -inf.

    Equals ``(1/alpha) * (1{y <= x1} - alpha) * (x1 - y)``, evaluated with the
    same operation order as the deep-tail branch of ``elementary_score_es`` so
    the two agree bitwise.
    """
    _require_level(alpha)
    _require_finite(x1=x1, y=y)
    hit = 1.0 if y <= x1 else 0.0
    diff = x1 - y
    return hit * diff / alpha - diff


def elementary_score_es(
    x1: float, x2: float, y: float, v: float, alpha: float = DEFAULT_ALPHA
) -> float:
    """Elementary score of the pair (x1, x2) at threshold ``v``, emphasizing ES.

    Vanishes for ``v > max(x2, y)``.  When ``v`` lies below both ``x2`` and
    ``y``, the threshold cancels algebraically; that branch is grouped so the
    cancellation is exact in floating point (see ``tail_limit_score``).
    """
    _require_level(alpha)
    _require_finite(x1=x1, x2=x2, y=y, v=v)
    if x1 < x2:
        raise ValueError(f"invalid joint forecast: var={x1} < es={x2}")
    hit = 1.0 if y <= x1 else 0.0
    diff = x1 - y
    if v <= x2 and v <= y:
        return hit * diff / alpha - diff
    score = 0.0
    if v <= x2:
        score += hit * diff / alpha - (x1 - v)
    if v <= y:
        score += y - v
    return score


def elementary_scores_var(
    var: np.ndarray, y: np.ndarray, thresholds: np.ndarray, alpha: float = DEFAULT_ALPHA
) -> np.ndarray:
    """Vectorized ``elementary_score_var``: rows are periods, columns thresholds."""
    _require_level(alpha)
    var = np.asarray(var, dtype=float)[:, None]
    y = np.asarray(y, dtype=float)[:, None]
    v = np.asarray(thresholds, dtype=float)[None, :]
    hit = (y <= var).astype(float)
    return (hit - alpha) * ((v <= var).astype(float) - (v <= y).astype(float))


def elementary_scores_es(
    var: np.ndarray,
    es: np.ndarray,
    y: np.ndarray,
    thresholds: np.ndarray,
    alpha: float = DEFAULT_ALPHA,
) -> np.ndarray:
    """Vectorized ``elementary_score_es``; bitwise identical to the scalar form."""
    _require_level(alpha)
    var = np.asarray(var, dtype=float)
    es = np.asarray(es, dtype=float)
    y = np.asarray(y, dtype=float)
    v = np.asarray(thresholds, dtype=float)[None, :]
    hit = (y <= var).astype(float)
    diff = var - y
    core = hit * diff / alpha
    below_es = v <= es[:, None]
    below_y = v <= y[:, None]
    partial = np.where(below_es, core[:, None] - (var[:, None] - v), 0.0)
    partial = partial + np.where(below_y, y[:, None] - v, 0.0)
    return np.where(below_es & below_y, (core - diff)[:, None], partial)


def fz_score(
    forecast: JointForecast, y: float, alpha: float = DEFAULT_ALPHA, spec: FzSpec = None
) -> float:
    """General consistent score of a (VaR, ES) forecast, normalized to S(y, y, y) = 0."""
    if spec is None:
        raise ValueError("fz_score requires an FzSpec")
    _require_level(alpha)
    _require_finite(y=y)
    x1, x2 = forecast.var, forecast.es
    g1_x1 = float(spec.g1(x1))
    g1_y = float(spec.g1(y))
    g2_x2 = float(spec.g2(x2))
    anti_x2 = float(spec.g2_antiderivative(x2))
    anti_y = float(spec.g2_antiderivative(y))
    _require_finite(g1_x1=g1_x1, g1_y=g1_y, g2_x2=g2_x2, anti_x2=anti_x2, anti_y=anti_y)
    if g2_x2 < 0:
        raise ValueError(f"g2 must be nonnegative, got g2({x2}) = {g2_x2}")
    hit = 1.0 if y <= x1 else 0.0
    return (
        (hit - alpha) * (g1_x1 - g1_y)
        + g2_x2 * (hit * (x1 - y) / alpha - (x1 - x2))
        - (anti_x2 - anti_y)
    )


def mixture_score(
    forecast: JointForecast,
    y: float,
    alpha: float = DEFAULT_ALPHA,
    h2: DiscreteMixture = None,
    h1: DiscreteMixture | None = None,
) -> float:
    """Weighted sum of elementary scores over discrete mixing measures.

    ``h2`` mixes the ES-family scores; an optional ``h1`` adds quantile-family
    terms.  With ``h1`` absent the result stays inside the ES-focused class.
    """
    if h2 is None:
        raise ValueError("mixture_score requires an ES-family mixture (h2)")
    _require_level(alpha)
    x1, x2 = forecast.var, forecast.es
    total = 0.0
    for v, w in zip(h2.values, h2.weights):
        total += w * elementary_score_es(x1, x2, y, v, alpha)
    if h1 is not None:
        for v, w in zip(h1.values, h1.weights):
            total += w * elementary_score_var(x1, y, v, alpha)
    return total


def build_threshold_grid(
    forecast_values: Sequence[float],
    realizations: Sequence[float],
    n: int,
    kind: ScoreFamily = ScoreFamily.ES,
) -> ThresholdGrid:
    """Equally spaced thresholds spanning all supplied forecasts and outcomes.

    Endpoints are included.  A zero-width range is rejected: it signals a
    degenerate evaluation problem rather than something worth scoring.
    """
    if n < 2:
        raise ValueError(f"grid size must be at least 2, got {n}")
    pooled = np.concatenate(
        [np.asarray(forecast_values, dtype=float).ravel(), np.asarray(realizations, dtype=float).ravel()]
    )
    if pooled.size == 0:
        raise ValueError("cannot build a threshold grid from empty inputs")
    if not np.all(np.isfinite(pooled)):
        raise ValueError("threshold grid inputs must be finite")
    lo, hi = float(pooled.min()), float(pooled.max())
    if hi <= lo:
        raise ValueError(f"degenerate threshold range [{lo}, {hi}]")
    return ThresholdGrid(np.linspace(lo, hi, n), kind=kind)
