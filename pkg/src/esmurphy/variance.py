"""Variance estimators for mean score differences.

Two conventions are supported for the standard error of a column mean:

* ``iid``: sample standard deviation (ddof=1) divided by sqrt(T), matching the
  assumption that one-step-ahead score differences are independent over time;
* ``nw``:  Bartlett-kernel autocorrelation-consistent long-run variance.

``newey_west_variance`` returns the long-run variance of the *series*; the
variance of the sample mean is this value divided by T, and the routines below
compose it that way.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VARIANCE_KINDS = ("iid", "nw")


def newey_west_variance(x, lag: int) -> float:
    """Bartlett-weighted long-run variance, floored at zero.

    gamma_0 + 2 * sum_{j=1..lag} (1 - j/(lag+1)) * gamma_j with autocovariances
    computed with a divide-by-T convention; lag=0 reduces to the biased sample
    variance.
    """
    x = np.asarray(x, dtype=float)
    if lag < 0:
        raise ValueError(f"truncation lag must be nonnegative, got {lag}")
    n = x.size
    if n < lag + 2:
        raise ValueError(f"series of length {n} too short for lag {lag}")
    if np.all(x == x[0]):
        # a constant series has no variance; demeaning would leave rounding
        # residue that downstream degeneracy rules must not mistake for signal
        return 0.0
    centered = x - x.mean()
    value = float(centered @ centered) / n
    for j in range(1, lag + 1):
        gamma_j = float(centered[j:] @ centered[:-j]) / n
        value += 2.0 * (1.0 - j / (lag + 1.0)) * gamma_j
    return max(value, 0.0)


@dataclass(frozen=True)
class VarianceEstimator:
    """Choice of standard-error convention for mean score differences."""

    kind: str = "iid"
    lag: int = 3

    def __post_init__(self) -> None:
        if self.kind not in VARIANCE_KINDS:
            raise ValueError(f"variance kind must be one of {VARIANCE_KINDS}, got {self.kind!r}")
        if self.lag < 0:
            raise ValueError(f"truncation lag must be nonnegative, got {self.lag}")

    def mean_standard_errors(self, panel: np.ndarray) -> np.ndarray:
        """Standard error of each column mean of a (T, M) panel."""
        panel = np.asarray(panel, dtype=float)
        if panel.ndim != 2:
            raise ValueError("panel must be two-dimensional")
        n = panel.shape[0]
        if n < 2:
            raise ValueError(f"need at least 2 periods to estimate a variance, got {n}")
        constant = np.all(panel == panel[:1], axis=0)
        if self.kind == "iid":
            se = panel.std(axis=0, ddof=1) / np.sqrt(n)
        else:
            if n < self.lag + 2:
                raise ValueError(f"series of length {n} too short for lag {self.lag}")
            centered = panel - panel.mean(axis=0)
            lrv = np.einsum("tm,tm->m", centered, centered) / n
            for j in range(1, self.lag + 1):
                gamma_j = np.einsum("tm,tm->m", centered[j:], centered[:-j]) / n
                lrv = lrv + 2.0 * (1.0 - j / (self.lag + 1.0)) * gamma_j
            se = np.sqrt(np.maximum(lrv, 0.0) / n)
        # columns of identical values are degenerate by construction, not by
        # estimate; zero them exactly so p-value rules can key off se == 0
        se[constant] = 0.0
        return se
