"""Murphy diagrams: mean elementary scores across a threshold grid.

The curve of a forecast method maps each threshold to the empirical mean of
the corresponding elementary score; method A empirically dominates method B on
a grid when A's curve lies weakly below B's everywhere on it.  Curve
differences carry pointwise confidence bands from either an iid or a
Newey-West standard error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import svg as _svg
from .scores import (
    DEFAULT_ALPHA,
    JointForecast,
    ScoreFamily,
    ThresholdGrid,
    _require_level,
    elementary_scores_es,
    elementary_scores_var,
)
from .variance import VarianceEstimator

NORMAL_95 = 1.96  # fixed two-sided 95% multiplier for diff bands


@dataclass(frozen=True)
class EvaluationSeries:
    """Time-aligned forecasts of one or two methods plus realizations."""

    times: np.ndarray
    var_a: np.ndarray
    es_a: np.ndarray
    realizations: np.ndarray
    var_b: np.ndarray | None = None
    es_b: np.ndarray | None = None

    def __post_init__(self) -> None:
        times = np.asarray(self.times)
        var_a = np.asarray(self.var_a, dtype=float)
        es_a = np.asarray(self.es_a, dtype=float)
        y = np.asarray(self.realizations, dtype=float)
        n = times.size
        if n == 0:
            raise ValueError("evaluation series must be nonempty")
        arrays = {"times": times, "var_a": var_a, "es_a": es_a, "realizations": y}
        has_b = (self.var_b is None) != (self.es_b is None)
        if has_b:
            raise ValueError("method B requires both var_b and es_b")
        var_b = es_b = None
        if self.var_b is not None:
            var_b = np.asarray(self.var_b, dtype=float)
            es_b = np.asarray(self.es_b, dtype=float)
            arrays.update(var_b=var_b, es_b=es_b)
        for name, arr in arrays.items():
            if arr.ndim != 1 or arr.size != n:
                raise ValueError(f"{name} must be 1-d of length {n}")
        if n > 1 and not np.all(times[1:] > times[:-1]):
            raise ValueError("times must be strictly increasing")
        for name, arr in arrays.items():
            if name != "times" and not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        if np.any(var_a < es_a):
            raise ValueError("method A violates var >= es")
        if var_b is not None and np.any(var_b < es_b):
            raise ValueError("method B violates var >= es")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "var_a", var_a)
        object.__setattr__(self, "es_a", es_a)
        object.__setattr__(self, "realizations", y)
        object.__setattr__(self, "var_b", var_b)
        object.__setattr__(self, "es_b", es_b)

    @classmethod
    def from_joint_forecasts(
        cls,
        times: Sequence,
        forecasts_a: Sequence[JointForecast],
        realizations: Sequence[float],
        forecasts_b: Sequence[JointForecast] | None = None,
    ) -> "EvaluationSeries":
        kwargs = {}
        if forecasts_b is not None:
            kwargs = {
                "var_b": [f.var for f in forecasts_b],
                "es_b": [f.es for f in forecasts_b],
            }
        return cls(
            times=np.asarray(times),
            var_a=np.asarray([f.var for f in forecasts_a], dtype=float),
            es_a=np.asarray([f.es for f in forecasts_a], dtype=float),
            realizations=np.asarray(realizations, dtype=float),
            **kwargs,
        )

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def has_b(self) -> bool:
        return self.var_b is not None

    def pooled_forecast_values(self) -> np.ndarray:
        """All VaR and ES components of every method present."""
        parts = [self.var_a, self.es_a]
        if self.has_b:
            parts += [self.var_b, self.es_b]
        return np.concatenate(parts)


def score_panel(
    series: EvaluationSeries,
    method: str,
    grid: ThresholdGrid,
    alpha: float = DEFAULT_ALPHA,
) -> np.ndarray:
    """Per-period elementary scores, shape (T, len(grid))."""
    if method not in ("a", "b"):
        raise ValueError(f"method must be 'a' or 'b', got {method!r}")
    if method == "b" and not series.has_b:
        raise ValueError("series has no method B forecasts")
    var = series.var_a if method == "a" else series.var_b
    es = series.es_a if method == "a" else series.es_b
    if grid.kind is ScoreFamily.VAR:
        return elementary_scores_var(var, series.realizations, grid.values, alpha)
    return elementary_scores_es(var, es, series.realizations, grid.values, alpha)


@dataclass(frozen=True)
class MurphyCurve:
    """Mean elementary score per threshold with the variance of each mean."""

    grid: ThresholdGrid
    mean_scores: np.ndarray
    pointwise_variance: np.ndarray

    def __post_init__(self) -> None:
        mean_scores = np.asarray(self.mean_scores, dtype=float)
        variance = np.asarray(self.pointwise_variance, dtype=float)
        if mean_scores.shape != (len(self.grid),) or variance.shape != (len(self.grid),):
            raise ValueError("curve arrays must match the grid length")
        if np.any(variance < 0):
            raise ValueError("pointwise variances must be nonnegative")
        object.__setattr__(self, "mean_scores", mean_scores)
        object.__setattr__(self, "pointwise_variance", variance)


@dataclass(frozen=True)
class DiffCurve:
    """Method A minus method B mean scores with a pointwise 95% band."""

    grid: ThresholdGrid
    mean_diffs: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.grid)
        diffs = np.asarray(self.mean_diffs, dtype=float)
        lower = np.asarray(self.ci_lower, dtype=float)
        upper = np.asarray(self.ci_upper, dtype=float)
        for name, arr in (("mean_diffs", diffs), ("ci_lower", lower), ("ci_upper", upper)):
            if arr.shape != (n,):
                raise ValueError(f"{name} must match the grid length")
        if np.any(lower > diffs) or np.any(diffs > upper):
            raise ValueError("band must bracket the mean differences")
        object.__setattr__(self, "mean_diffs", diffs)
        object.__setattr__(self, "ci_lower", lower)
        object.__setattr__(self, "ci_upper", upper)

    @property
    def a_dominates_on_grid(self) -> bool:
        """Empirical weak dominance of A over B, checked on the grid only."""
        return bool(np.all(self.mean_diffs <= 0.0))


def murphy_curve(
    series: EvaluationSeries,
    method: str,
    grid: ThresholdGrid,
    alpha: float = DEFAULT_ALPHA,
) -> MurphyCurve:
    """Empirical Murphy curve of one method over a threshold grid.

    The pointwise variance is the sample variance of per-period scores divided
    by T (zero for a single observation).
    """
    _require_level(alpha)
    panel = score_panel(series, method, grid, alpha)
    n = panel.shape[0]
    means = panel.mean(axis=0)
    if n > 1:
        variance = panel.var(axis=0, ddof=1) / n
    else:
        variance = np.zeros(panel.shape[1])
    return MurphyCurve(grid=grid, mean_scores=means, pointwise_variance=variance)


def murphy_diff(
    series: EvaluationSeries,
    grid: ThresholdGrid,
    alpha: float = DEFAULT_ALPHA,
    variance: VarianceEstimator = VarianceEstimator(),
) -> DiffCurve:
    """Difference curve (A minus B) with a pointwise 95% confidence band.

    A threshold where every per-period difference coincides gets a zero-width
    band; downstream tests read that as no evidence either way.
    """
    if not series.has_b:
        raise ValueError("difference curve requires both methods")
    diffs = score_panel(series, "a", grid, alpha) - score_panel(series, "b", grid, alpha)
    means = diffs.mean(axis=0)
    se = variance.mean_standard_errors(diffs)
    return DiffCurve(
        grid=grid,
        mean_diffs=means,
        ci_lower=means - NORMAL_95 * se,
        ci_upper=means + NORMAL_95 * se,
    )


def _require_shared_grid(curves) -> ThresholdGrid:
    grid = curves[0].grid
    for curve in curves[1:]:
        if curve.grid.kind is not grid.kind or not np.array_equal(curve.grid.values, grid.values):
            raise ValueError("curves must share one threshold grid for overlay output")
    return grid


def emit_curve_data(curves, fmt: str, labels: Sequence[str] | None = None) -> bytes:
    """Serialize curves deterministically to CSV, JSON, or SVG.

    CSV for one Murphy curve has columns ``v,mean_score,variance``; one diff
    curve has ``v,mean_diff,ci_lower,ci_upper``.  Several curves widen the CSV
    with per-label column suffixes; SVG overlays them in one plot.
    """
    curves = list(curves)
    if not curves:
        raise ValueError("no curves to emit")
    kinds = {type(c) for c in curves}
    if len(kinds) > 1:
        raise ValueError("cannot mix Murphy and difference curves in one artifact")
    grid = _require_shared_grid(curves)
    is_diff = isinstance(curves[0], DiffCurve)
    if labels is None:
        labels = [str(i + 1) for i in range(len(curves))]
    if len(labels) != len(curves):
        raise ValueError("labels must align with curves")
    fmt = fmt.lower()

    if fmt == "csv":
        lines = []
        if is_diff:
            cols = ("mean_diff", "ci_lower", "ci_upper")
            pull = lambda c: (c.mean_diffs, c.ci_lower, c.ci_upper)
        else:
            cols = ("mean_score", "variance")
            pull = lambda c: (c.mean_scores, c.pointwise_variance)
        if len(curves) == 1:
            lines.append("v," + ",".join(cols))
            data = pull(curves[0])
            for i, v in enumerate(grid.values):
                lines.append(",".join([repr(float(v))] + [repr(float(col[i])) for col in data]))
        else:
            header = ["v"]
            for label in labels:
                header += [f"{c}_{label}" for c in cols]
            lines.append(",".join(header))
            data = [pull(c) for c in curves]
            for i, v in enumerate(grid.values):
                row = [repr(float(v))]
                for cols_c in data:
                    row += [repr(float(col[i])) for col in cols_c]
                lines.append(",".join(row))
        return ("\n".join(lines) + "\n").encode()

    if fmt == "json":
        payload = []
        for label, curve in zip(labels, curves):
            entry = {"label": label, "family": grid.kind.value, "v": grid.values.tolist()}
            if is_diff:
                entry.update(
                    mean_diff=curve.mean_diffs.tolist(),
                    ci_lower=curve.ci_lower.tolist(),
                    ci_upper=curve.ci_upper.tolist(),
                    a_dominates_on_grid=curve.a_dominates_on_grid,
                )
            else:
                entry.update(
                    mean_score=curve.mean_scores.tolist(),
                    variance=curve.pointwise_variance.tolist(),
                )
            payload.append(entry)
        return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode()

    if fmt == "svg":
        if is_diff:
            series = [(label, c.mean_diffs) for label, c in zip(labels, curves)]
            bands = [(c.ci_lower, c.ci_upper) for c in curves]
            text = _svg.render_line_plot(
                grid.values,
                series,
                title="Mean elementary score difference",
                x_label="threshold",
                y_label="score difference",
                zero_line=True,
                bands=bands,
            )
        else:
            series = [(label, c.mean_scores) for label, c in zip(labels, curves)]
            text = _svg.render_line_plot(
                grid.values,
                series,
                title="Murphy diagram",
                x_label="threshold",
                y_label="mean elementary score",
            )
        return text.encode()

    raise ValueError(f"unknown format {fmt!r}; expected csv, json, or svg")
