import numpy as np
import pytest

import esmurphy as em


def business_days(start: str, count: int) -> np.ndarray:
    day = np.datetime64(start)
    out = []
    while len(out) < count:
        if np.is_busday(day):
            out.append(day)
        day += 1
    return np.asarray(out, dtype="datetime64[D]")


def garch_market(n: int, seed: int, *, omega=0.05, gamma=0.08, beta=0.88) -> em.MarketData:
    """Synthetic daily market data with rk equal (bitwise) to the squared return."""
    rng = np.random.default_rng(seed)
    rets = np.empty(n)
    rets[0] = 0.0
    s2 = omega / (1.0 - gamma - beta)
    for t in range(1, n):
        rets[t] = np.sqrt(s2) * rng.standard_normal()
        s2 = omega + gamma * rets[t] ** 2 + beta * s2
    close = 100.0 * np.exp(np.cumsum(rets / 100.0))
    recomputed = em.log_returns(close)
    rk = np.concatenate([[0.0], recomputed**2])
    return em.MarketData(dates=business_days("2015-01-05", n), close=close, rk=rk)


def noisy_vs_perfect_series(horizon: int, zeta_a: float, zeta_b: float, seed: int) -> em.EvaluationSeries:
    returns, sigma = em.simulate_dgp(em.DgpConfig(horizon=horizon, seed=seed))
    var_a, es_a = em.make_forecaster(sigma, em.ForecasterSpec(zeta_a), 0.025, 6, seed + 1)
    var_b, es_b = em.make_forecaster(sigma, em.ForecasterSpec(zeta_b), 0.025, 6, seed + 2)
    return em.EvaluationSeries(
        times=np.arange(horizon),
        var_a=var_a,
        es_a=es_a,
        realizations=returns,
        var_b=var_b,
        es_b=es_b,
    )


@pytest.fixture
def small_market() -> em.MarketData:
    return garch_market(420, seed=11)


@pytest.fixture
def paired_series() -> em.EvaluationSeries:
    return noisy_vs_perfect_series(300, zeta_a=0.5, zeta_b=0.0, seed=2024)
