"""Put-option reading of the ES-family elementary scores.

Writing a European put at strike x1 for a premium of alpha * (x1 - v)
reproduces, up to an affine term that no action can influence, the negative
elementary score at threshold v.  Under optimal play the premium collapses to
P = alpha * (VaR - ES) of the spot distribution; for a driftless lognormal
spot this equals the zero-rate Black-Scholes put price, which this module
verifies numerically.

The standard normal CDF used throughout is scipy's erf-based ``ndtr``
(absolute error below 1e-15); the pricing identity checks depend on it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr, ndtri

from .scores import JointForecast, _require_level


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely many atoms with probabilities; expectations are exact sums."""

    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self) -> None:
        atoms = np.asarray(self.atoms, dtype=float)
        probs = np.asarray(self.probs, dtype=float)
        if atoms.ndim != 1 or atoms.shape != probs.shape or atoms.size == 0:
            raise ValueError("atoms and probs must be nonempty, 1-d, and aligned")
        if not (np.all(np.isfinite(atoms)) and np.all(np.isfinite(probs))):
            raise ValueError("atoms and probs must be finite")
        if np.any(probs < 0) or not math.isclose(float(probs.sum()), 1.0, abs_tol=1e-9):
            raise ValueError("probs must be nonnegative and sum to one")
        order = np.argsort(atoms, kind="stable")
        object.__setattr__(self, "atoms", atoms[order])
        object.__setattr__(self, "probs", probs[order])

    def cdf(self, x: float) -> float:
        return float(self.probs[self.atoms <= x].sum())

    def lower_partial_expectation(self, x: float) -> float:
        """E[Y * 1{Y <= x}] as an exact atom sum."""
        mask = self.atoms <= x
        return float((self.atoms[mask] * self.probs[mask]).sum())

    def mean(self) -> float:
        return float((self.atoms * self.probs).sum())

    def var_alpha(self, alpha: float) -> float:
        """Lower quantile: the smallest atom with cdf >= alpha."""
        _require_level(alpha)
        cumulative = np.cumsum(self.probs)
        index = int(np.searchsorted(cumulative, alpha - 1e-12))
        return float(self.atoms[min(index, self.atoms.size - 1)])

    def es_alpha(self, alpha: float) -> float:
        """Average of the quantiles over (0, alpha): an exact partial-atom sum."""
        _require_level(alpha)
        q = self.var_alpha(alpha)
        below = self.atoms < q
        mass_below = float(self.probs[below].sum())
        partial = float((self.atoms[below] * self.probs[below]).sum())
        return (partial + (alpha - mass_below) * q) / alpha


@dataclass(frozen=True)
class LognormalDistribution:
    """Lognormal law of a positive spot; mu and sigma act on the log scale."""

    mu: float
    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    def cdf(self, x: float) -> float:
        if x <= 0:
            return 0.0
        return float(ndtr((math.log(x) - self.mu) / self.sigma))

    def lower_partial_expectation(self, x: float) -> float:
        if x <= 0:
            return 0.0
        z = (math.log(x) - self.mu) / self.sigma
        return math.exp(self.mu + 0.5 * self.sigma**2) * float(ndtr(z - self.sigma))

    def mean(self) -> float:
        return math.exp(self.mu + 0.5 * self.sigma**2)

    def var_alpha(self, alpha: float) -> float:
        _require_level(alpha)
        return math.exp(self.mu + self.sigma * float(ndtri(alpha)))

    def es_alpha(self, alpha: float) -> float:
        # mean * Phi(z_alpha - sigma) / alpha; evaluating the quantile's z score
        # analytically avoids re-taking logs, which loses digits as sigma -> 0
        _require_level(alpha)
        z = float(ndtri(alpha))
        return self.mean() * float(ndtr(z - self.sigma)) / alpha


@dataclass(frozen=True)
class OptionScenario:
    """A driftless lognormal market: spot, annual volatility, maturity, tail level."""

    spot0: float
    annual_vol: float
    maturity_years: float
    alpha: float = 0.025
    strike: float | None = None

    def __post_init__(self) -> None:
        for name in ("spot0", "annual_vol", "maturity_years"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        _require_level(self.alpha)
        if self.strike is not None and not self.strike > 0:
            raise ValueError(f"strike must be positive, got {self.strike}")

    def distribution(self) -> LognormalDistribution:
        sigma = self.annual_vol * math.sqrt(self.maturity_years)
        mu = math.log(self.spot0) - 0.5 * self.annual_vol**2 * self.maturity_years
        return LognormalDistribution(mu=mu, sigma=sigma)


def es_put_price(alpha: float, var: float, es: float) -> float:
    """Premium alpha * (VaR - ES); nonnegative because VaR >= ES."""
    _require_level(alpha)
    if var < es:
        raise ValueError(f"var={var} must not be below es={es}")
    return alpha * (var - es)


def lognormal_var_es(scenario: OptionScenario) -> JointForecast:
    """(VaR, ES) of the lognormal spot at maturity."""
    dist = scenario.distribution()
    return JointForecast(
        var=dist.var_alpha(scenario.alpha), es=dist.es_alpha(scenario.alpha)
    )


def black_scholes_put_zero_rate(scenario: OptionScenario) -> float:
    """European put price at zero interest rate for the scenario's strike."""
    if scenario.strike is None:
        raise ValueError("scenario needs a strike")
    sigma = scenario.annual_vol * math.sqrt(scenario.maturity_years)
    half_var = 0.5 * scenario.annual_vol**2 * scenario.maturity_years
    log_moneyness = math.log(scenario.strike) - math.log(scenario.spot0)
    d_hi = (log_moneyness + half_var) / sigma
    d_lo = (log_moneyness - half_var) / sigma
    return scenario.strike * float(ndtr(d_hi)) - scenario.spot0 * float(ndtr(d_lo))


@dataclass(frozen=True)
class PricingCheck:
    """Both closed-form prices for one scenario and their absolute gap."""

    p_es: float
    p_bs: float
    abs_diff: float


def verify_pricing_equivalence(scenario: OptionScenario) -> PricingCheck:
    """Price the put two ways: alpha * (VaR - ES) versus Black-Scholes.

    The strike is set to the lognormal VaR (the optimal strike choice); the
    two closed forms must then agree up to numerical noise.
    """
    forecast = lognormal_var_es(scenario)
    p_es = es_put_price(scenario.alpha, forecast.var, forecast.es)
    p_bs = black_scholes_put_zero_rate(replace(scenario, strike=forecast.var))
    return PricingCheck(p_es=p_es, p_bs=p_bs, abs_diff=abs(p_es - p_bs))


def expected_profit(x1: float, x2: float, v: float, alpha: float, dist) -> float:
    """Expected profit of writing the put at strike x1, given writing signal x2.

    Zero when the writing condition x2 >= v fails; otherwise
    x1 * (alpha - F(x1)) + E[Y 1{Y <= x1}] - alpha * v.  As a function of the
    strike it peaks at the distribution's VaR with value alpha * (ES - v).
    """
    _require_level(alpha)
    if v > x2:
        return 0.0
    return (
        x1 * (alpha - dist.cdf(x1))
        + dist.lower_partial_expectation(x1)
        - alpha * v
    )
