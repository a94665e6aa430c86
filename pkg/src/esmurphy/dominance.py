"""Two-stage permutation test of forecast dominance.

Stage 1 computes one-sided pointwise p-values for the mean elementary-score
difference at every grid threshold (small p: evidence that the allegedly
dominant method is worse somewhere).  Stage 2 enforces the boundary of the
null by flipping the sign of whole rows of the score-difference panel,
re-computes the pointwise p-values for each of L sign assignments, and applies
the step-down minimum adjustment so the family-wise error rate over the grid
is controlled.  The test statistic is the minimum adjusted p-value.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.special import ndtr

from .murphy import EvaluationSeries, score_panel
from .scores import ScoreFamily, ThresholdGrid, _require_level, build_threshold_grid
from .variance import VarianceEstimator, newey_west_variance

__all__ = [
    "VarianceEstimator",
    "newey_west_variance",
    "DominanceTestConfig",
    "ScoreDiffPanel",
    "DominanceTestResult",
    "compute_diff_panel",
    "pointwise_p_values",
    "sign_permutation",
    "westfall_young_adjust",
    "dominance_test",
]

SCORE_SETS = ("s2", "both")
REFERENCES = ("normal", "student_t")


@dataclass(frozen=True)
class DominanceTestConfig:
    """Settings for the dominance test; defaults match the standard setup."""

    alpha: float = 0.025
    grid_size: int = 50
    permutations: int = 500
    block_length: int = 1
    variance: VarianceEstimator = VarianceEstimator()
    score_set: str = "s2"
    seed: int = 0
    reference: str = "normal"

    def __post_init__(self) -> None:
        _require_level(self.alpha)
        if self.grid_size < 2:
            raise ValueError(f"grid_size must be at least 2, got {self.grid_size}")
        if self.permutations < 1:
            raise ValueError(f"permutations must be at least 1, got {self.permutations}")
        if self.block_length < 1:
            raise ValueError(f"block_length must be at least 1, got {self.block_length}")
        if self.score_set not in SCORE_SETS:
            raise ValueError(f"score_set must be one of {SCORE_SETS}, got {self.score_set!r}")
        if self.reference not in REFERENCES:
            raise ValueError(f"reference must be one of {REFERENCES}, got {self.reference!r}")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "grid_size": self.grid_size,
            "permutations": self.permutations,
            "block_length": self.block_length,
            "variance": {"kind": self.variance.kind, "lag": self.variance.lag},
            "score_set": self.score_set,
            "seed": self.seed,
            "reference": self.reference,
        }


@dataclass(frozen=True)
class ScoreDiffPanel:
    """Per-period A-minus-B elementary-score differences, one column per threshold.

    With both families requested the first half of the columns belongs to the
    quantile-family grid and the second half to the ES-family grid.
    """

    diffs: np.ndarray
    grids: tuple[ThresholdGrid, ...]

    def __post_init__(self) -> None:
        diffs = np.asarray(self.diffs, dtype=float)
        if diffs.ndim != 2:
            raise ValueError("panel must be two-dimensional (periods x thresholds)")
        if not np.all(np.isfinite(diffs)):
            raise ValueError("panel entries must be finite")
        total = sum(len(g) for g in self.grids)
        if diffs.shape[1] != total:
            raise ValueError(
                f"panel has {diffs.shape[1]} columns but grids supply {total} thresholds"
            )
        object.__setattr__(self, "diffs", diffs)
        object.__setattr__(self, "grids", tuple(self.grids))

    @property
    def n_periods(self) -> int:
        return int(self.diffs.shape[0])

    @property
    def n_thresholds(self) -> int:
        return int(self.diffs.shape[1])

    def negated(self) -> "ScoreDiffPanel":
        return ScoreDiffPanel(diffs=-self.diffs, grids=self.grids)


def compute_diff_panel(series: EvaluationSeries, config: DominanceTestConfig) -> ScoreDiffPanel:
    """Score-difference panel of method A minus method B over the test grids."""
    if not series.has_b:
        raise ValueError("dominance testing requires forecasts from both methods")
    pooled = series.pooled_forecast_values()
    grids: list[ThresholdGrid] = []
    if config.score_set == "both":
        grids.append(
            build_threshold_grid(pooled, series.realizations, config.grid_size, ScoreFamily.VAR)
        )
    grids.append(
        build_threshold_grid(pooled, series.realizations, config.grid_size, ScoreFamily.ES)
    )
    blocks = []
    for grid in grids:
        blocks.append(
            score_panel(series, "a", grid, config.alpha)
            - score_panel(series, "b", grid, config.alpha)
        )
    return ScoreDiffPanel(diffs=np.hstack(blocks), grids=tuple(grids))


def _as_matrix(panel) -> np.ndarray:
    if isinstance(panel, ScoreDiffPanel):
        return panel.diffs
    return np.asarray(panel, dtype=float)


def pointwise_p_values(
    panel,
    variance: VarianceEstimator = VarianceEstimator(),
    reference: str = "normal",
) -> np.ndarray:
    """One-sided p-value per column for H0: zero mean against a positive mean.

    The t statistic is the column mean over its standard error; columns with a
    degenerate (zero) standard error count as carrying no evidence, p = 1.
    """
    diffs = _as_matrix(panel)
    if diffs.ndim != 2 or diffs.shape[0] < 2:
        raise ValueError("need a (T, M) panel with T >= 2")
    if reference not in REFERENCES:
        raise ValueError(f"reference must be one of {REFERENCES}, got {reference!r}")
    n = diffs.shape[0]
    means = diffs.mean(axis=0)
    se = variance.mean_standard_errors(diffs)
    p = np.ones(diffs.shape[1])
    live = se > 0.0
    t_stat = means[live] / se[live]
    if reference == "normal":
        p[live] = ndtr(-t_stat)
    else:
        p[live] = stats.t.sf(t_stat, df=n - 1)
    return p


def sign_permutation(panel: ScoreDiffPanel, block_length: int, rng: np.random.Generator) -> ScoreDiffPanel:
    """Flip the sign of whole blocks of consecutive rows, same sign across columns.

    Blocks have ``block_length`` rows; a final partial block gets its own sign.
    """
    if block_length < 1:
        raise ValueError(f"block_length must be at least 1, got {block_length}")
    diffs = _as_matrix(panel)
    n = diffs.shape[0]
    n_blocks = -(-n // block_length)
    signs = rng.integers(0, 2, size=n_blocks) * 2 - 1
    row_signs = np.repeat(signs, block_length)[:n].astype(float)
    flipped = diffs * row_signs[:, None]
    if isinstance(panel, ScoreDiffPanel):
        return ScoreDiffPanel(diffs=flipped, grids=panel.grids)
    return flipped


def westfall_young_adjust(observed_p, simulated_p) -> np.ndarray:
    """Step-down resampling adjustment of pointwise p-values.

    Sort the observed p-values; within each simulated replicate take running
    minima over the sorted tail, count how often those fall at or below the
    observed value, and finally enforce monotonicity along the sort order.
    The minimum of the result is the overall test statistic.
    """
    observed = np.asarray(observed_p, dtype=float)
    simulated = np.asarray(simulated_p, dtype=float)
    if observed.ndim != 1:
        raise ValueError("observed p-values must be one-dimensional")
    if simulated.ndim != 2 or simulated.shape[1] != observed.size:
        raise ValueError(
            f"simulated p-values must be (L, {observed.size}), got {simulated.shape}"
        )
    if simulated.shape[0] < 1:
        raise ValueError("need at least one simulated replicate")
    order = np.argsort(observed, kind="stable")
    sim_sorted = simulated[:, order]
    tail_min = np.minimum.accumulate(sim_sorted[:, ::-1], axis=1)[:, ::-1]
    # running minima over a shrinking tail can only grow along the sort order
    assert np.all(np.diff(tail_min, axis=1) >= 0)
    hits = tail_min <= observed[order][None, :]
    adjusted_sorted = np.maximum.accumulate(hits.mean(axis=0))
    adjusted = np.empty_like(adjusted_sorted)
    adjusted[order] = adjusted_sorted
    return adjusted


@dataclass(frozen=True)
class DominanceTestResult:
    """Outcome of one direction of the dominance test."""

    direction: str
    grids: tuple[ThresholdGrid, ...]
    pointwise_p: np.ndarray
    adjusted_p: np.ndarray
    minimal_wy_p: float
    notes: tuple[str, ...] = ()

    def to_dict(self, config: DominanceTestConfig | None = None) -> dict:
        doc = {
            "direction": self.direction,
            "grid": {
                "family": [g.kind.value for g in self.grids],
                "values": np.concatenate([g.values for g in self.grids]).tolist(),
            },
            "pointwise_p": self.pointwise_p.tolist(),
            "adjusted_p": self.adjusted_p.tolist(),
            "minimal_wy_p": self.minimal_wy_p,
            "notes": list(self.notes),
        }
        if config is not None:
            doc["config"] = config.to_dict()
        return doc


def _result(direction, grids, observed, simulated, notes) -> DominanceTestResult:
    adjusted = westfall_young_adjust(observed, simulated)
    return DominanceTestResult(
        direction=direction,
        grids=grids,
        pointwise_p=observed,
        adjusted_p=adjusted,
        minimal_wy_p=float(adjusted.min()),
        notes=notes,
    )


def dominance_test(
    series: EvaluationSeries, config: DominanceTestConfig = DominanceTestConfig()
) -> tuple[DominanceTestResult, DominanceTestResult]:
    """Run the full two-stage test in both directions.

    Returns results for H0 "A weakly dominates B" and H0 "B weakly dominates
    A".  Both directions reuse the same sign assignments, drawn from
    per-replicate substreams of ``config.seed``, so the output is deterministic
    and independent of any parallel execution of the replicates.
    """
    panel = compute_diff_panel(series, config)
    if panel.n_periods < 2:
        raise ValueError("dominance test needs at least two periods")
    variance, reference = config.variance, config.reference
    observed_ab = pointwise_p_values(panel, variance, reference)
    observed_ba = pointwise_p_values(panel.negated(), variance, reference)

    n_rep = config.permutations
    sims_ab = np.empty((n_rep, panel.n_thresholds))
    sims_ba = np.empty((n_rep, panel.n_thresholds))
    streams = np.random.SeedSequence(config.seed).spawn(n_rep)
    for i, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        flipped = sign_permutation(panel, config.block_length, rng)
        sims_ab[i] = pointwise_p_values(flipped, variance, reference)
        sims_ba[i] = pointwise_p_values(flipped.negated(), variance, reference)

    notes: tuple[str, ...] = ()
    if config.score_set == "both" and variance.kind == "iid":
        notes = (
            "both score families with iid variance: quantile-family score "
            "differences can be serially dependent; consider variance kind 'nw'",
        )
    return (
        _result("a_dominates_b", panel.grids, observed_ab, sims_ab, notes),
        _result("b_dominates_a", panel.grids, observed_ba, sims_ba, notes),
    )
