import logging
import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

import esmurphy as em
from esmurphy.models import variance_recursion

from conftest import business_days, garch_market


def t_cdf_reference(x, nu):
    """Student-t CDF through the regularized incomplete beta, scipy-free."""
    mp.mp.dps = 30
    x, nu = mp.mpf(x), mp.mpf(nu)
    if x == 0:
        return mp.mpf("0.5")
    z = nu / (nu + x * x)
    tail = mp.betainc(nu / 2, mp.mpf(1) / 2, 0, z, regularized=True) / 2
    return tail if x < 0 else 1 - tail


def t_quantile_reference(p, nu, lo=-100.0, hi=100.0):
    p = mp.mpf(p)
    lo, hi = mp.mpf(lo), mp.mpf(hi)
    for _ in range(200):
        mid = (lo + hi) / 2
        if t_cdf_reference(mid, nu) < p:
            lo = mid
        else:
            hi = mid
    return float((lo + hi) / 2)


class TestLogReturns:
    def test_pinned_values(self):
        assert em.log_returns([100.0, 100.0])[0] == 0.0
        assert em.log_returns([100.0, 101.0])[0] == pytest.approx(0.995033, abs=1e-6)
        assert em.log_returns([100.0, 90.0])[0] == pytest.approx(-10.536052, abs=1e-6)

    def test_nonpositive_price_rejected(self):
        with pytest.raises(ValueError):
            em.log_returns([100.0, -1.0])
        with pytest.raises(ValueError):
            em.log_returns([100.0])


class TestStudentT:
    def test_quantile_pinned_and_against_reference(self):
        q = em.student_t_quantile(0.025, 6)
        assert q == pytest.approx(-2.4469, abs=5e-5)
        assert q == pytest.approx(t_quantile_reference(0.025, 6), abs=1e-10)

    def test_quantile_symmetry_and_monotonicity(self):
        assert em.student_t_quantile(0.5, 9) == 0.0
        # complements are exact doubles only up to representation, so the
        # antisymmetry check allows for that last-ulp slack
        assert em.student_t_quantile(0.975, 6) == pytest.approx(
            -em.student_t_quantile(0.025, 6), abs=1e-12
        )
        ps = np.linspace(0.01, 0.99, 25)
        qs = [em.student_t_quantile(p, 4) for p in ps]
        assert np.all(np.diff(qs) > 0)

    def test_quantile_domain_errors(self):
        with pytest.raises(ValueError):
            em.student_t_quantile(0.0, 6)
        with pytest.raises(ValueError):
            em.student_t_quantile(1.2, 6)

    def test_es_matches_quantile_quadrature(self):
        for alpha, nu in ((0.025, 6), (0.1, 4), (0.05, 12)):
            closed = em.student_t_es(alpha, nu)
            quad, err = integrate.quad(
                lambda u: em.student_t_quantile(u, nu), 0.0, alpha, limit=200
            )
            assert closed == pytest.approx(quad / alpha, abs=1e-8)

    def test_es_below_quantile_in_left_tail(self):
        for alpha in (0.01, 0.1, 0.4):
            assert em.student_t_es(alpha, 6) < em.student_t_quantile(alpha, 6)

    def test_es_vanishes_as_level_to_one(self):
        assert abs(em.student_t_es(1 - 1e-9, 6)) < 1e-6

    def test_es_requires_heavy_tail_bound(self):
        with pytest.raises(ValueError):
            em.student_t_es(0.025, 1)


class TestScaledForecast:
    def test_pinned_unit_sigma(self):
        forecast = em.scaled_t_var_es(1.0, 0.025, 6)
        assert forecast.var == pytest.approx(-1.9979, abs=5e-5)
        assert forecast.var >= forecast.es

    def test_positive_homogeneity(self):
        one = em.scaled_t_var_es(1.0, 0.025, 6)
        two = em.scaled_t_var_es(2.0, 0.025, 6)
        assert two.var == pytest.approx(2 * one.var, rel=1e-12)
        assert two.es == pytest.approx(2 * one.es, rel=1e-12)

    def test_invalid_sigma_rejected(self):
        with pytest.raises(ValueError):
            em.scaled_t_var_es(0.0, 0.025, 6)


class TestVarianceRecursion:
    def test_matches_naive_loop(self):
        rng = np.random.default_rng(1)
        drivers = rng.random(100)
        fast = variance_recursion(0.1, 0.5, 0.4, drivers, 0.35)
        slow = [0.35]
        for d in drivers:
            slow.append(0.1 + 0.5 * d + 0.4 * slow[-1])
        assert np.allclose(fast, slow, rtol=1e-13, atol=0)


class TestQmlFit:
    @staticmethod
    def simulate_garch(omega, gamma, beta, size, seed):
        rng = np.random.default_rng(seed)
        returns = np.empty(size)
        s2 = omega / (1 - gamma - beta)
        for t in range(size):
            returns[t] = math.sqrt(s2) * rng.standard_normal()
            s2 = omega + gamma * returns[t] ** 2 + beta * s2
        return returns

    def test_garch_self_consistency(self):
        returns = self.simulate_garch(0.1, 0.5, 0.4, 20000, seed=2)
        params = em.fit_qml(returns, returns**2, "squared_return")
        assert params.omega == pytest.approx(0.1, abs=0.05)
        assert params.gamma == pytest.approx(0.5, abs=0.05)
        assert params.beta == pytest.approx(0.4, abs=0.05)

    def test_heavy_driver_self_consistency(self):
        rng = np.random.default_rng(3)
        size = 20000
        log_rk = np.empty(size)
        log_rk[0] = -0.3
        for t in range(1, size):
            log_rk[t] = -0.015 + 0.95 * log_rk[t - 1] + 0.25 * rng.standard_normal()
        rk = np.exp(log_rk)
        sig2 = variance_recursion(0.1, 0.5, 0.4, rk[:-1], 0.35)
        returns = np.sqrt(sig2) * rng.standard_normal(size)
        params = em.fit_qml(returns, rk, "realized_kernel")
        assert params.omega == pytest.approx(0.1, abs=0.05)
        assert params.gamma == pytest.approx(0.5, abs=0.05)
        assert params.beta == pytest.approx(0.4, abs=0.05)

    def test_constant_returns_rejected(self):
        with pytest.raises(ValueError):
            em.fit_qml(np.full(500, 1.3), np.full(500, 1.69), "squared_return")

    def test_no_arch_data_gives_small_gamma(self):
        rng = np.random.default_rng(4)
        returns = 1.5 * rng.standard_normal(8000)
        params = em.fit_qml(returns, returns**2, "squared_return")
        assert params.gamma < 0.05
        implied = params.omega / (1 - params.beta - params.gamma * 1.0)
        assert implied == pytest.approx(returns.var(ddof=1), rel=0.15)

    def test_negative_driver_rejected(self):
        with pytest.raises(ValueError):
            em.fit_qml(np.random.default_rng(5).standard_normal(100), np.full(100, -1.0), "squared_return")


class TestHistoricalSimulation:
    def test_single_tail_observation(self):
        window = np.array([-5.0, -1.0] + list(range(38)))
        forecast = em.hs_forecast(window, 0.025)
        assert forecast.var == -5.0 and forecast.es == -5.0

    def test_two_tail_observations(self):
        window = np.array([-5.0, -3.0] + list(np.linspace(0, 5, 78)))
        forecast = em.hs_forecast(window, 0.025)
        assert forecast.var == -3.0
        assert forecast.es == -4.0

    def test_constant_window(self):
        forecast = em.hs_forecast(np.full(40, 0.7), 0.025)
        assert forecast.var == forecast.es == 0.7

    def test_empty_window_rejected(self):
        with pytest.raises(ValueError):
            em.hs_forecast([], 0.025)


class TestViolationRate:
    def test_perfect_forecasts_hit_alpha(self):
        returns, sigma = em.simulate_dgp(em.DgpConfig(horizon=20000, seed=6))
        scale = math.sqrt(4.0 / 6.0)
        var = scale * sigma * em.student_t_quantile(0.025, 6)
        rate = float((returns < var).mean())
        assert rate == pytest.approx(0.025, abs=0.01)


class TestRefitSchedule:
    def test_first_trading_days(self):
        dates = business_days("2020-01-01", 130)
        schedule = em.refit_schedule(dates, 60)
        assert schedule[0] == 61
        months = dates.astype("datetime64[M]")
        expected = [61] + [
            i for i in range(62, 130) if months[i] != months[i - 1]
        ]
        assert list(schedule) == expected

    def test_too_short_calendar_rejected(self):
        with pytest.raises(ValueError):
            em.refit_schedule(business_days("2020-01-01", 30), 60)


class TestRollingEvaluation:
    def test_hs_on_constant_data(self):
        dates = business_days("2018-01-01", 80)
        data = em.MarketData(dates=dates, close=np.full(80, 42.0))
        series = em.rolling_evaluation(data, "hs", em.RollingConfig(window=40))
        assert len(series) == 80 - 41
        assert np.all(series.var_a == 0.0) and np.all(series.es_a == 0.0)

    def test_heavy_equals_garch_when_rk_is_squared_return(self, small_market):
        config = em.RollingConfig(window=120)
        garch = em.rolling_evaluation(small_market, "garch", config)
        heavy = em.rolling_evaluation(small_market, "heavy", config)
        assert np.array_equal(garch.var_a, heavy.var_a)
        assert np.array_equal(garch.es_a, heavy.es_a)

    def test_heavy_without_rk_rejected(self):
        dates = business_days("2018-01-01", 80)
        data = em.MarketData(dates=dates, close=np.linspace(90, 110, 80))
        with pytest.raises(ValueError):
            em.rolling_evaluation(data, "heavy", em.RollingConfig(window=40))

    def test_missing_rk_rows_dropped(self, small_market, caplog):
        rk = small_market.rk.copy()
        rk[200:205] = np.nan
        data = em.MarketData(dates=small_market.dates, close=small_market.close, rk=rk)
        with caplog.at_level(logging.WARNING):
            series = em.rolling_evaluation(data, "heavy", em.RollingConfig(window=120))
        assert len(series) == len(small_market) - 5 - 121
        assert any("missing realized kernel" in r.message for r in caplog.records)

    def test_out_of_sample_alignment(self, small_market):
        config = em.RollingConfig(window=120)
        series = em.rolling_evaluation(small_market, "garch", config)
        returns = em.log_returns(small_market)
        assert np.array_equal(series.realizations, returns[120:])
        assert series.times[0] == small_market.dates[121]

    def test_summary_fields(self, small_market):
        series = em.rolling_evaluation(small_market, "hs", em.RollingConfig(window=120))
        info = em.evaluation_summary(series, 0.025)
        assert set(info) == {"n", "avg_var", "avg_es", "violation_rate"}
        assert 0.0 <= info["violation_rate"] <= 1.0
        assert info["avg_es"] <= info["avg_var"]


class TestMarketCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(
            "date,close,rk\n2020-01-02,100.0,1.5\n2020-01-03,101.0,\n2020-01-06,99.0,0.7\n"
        )
        data = em.load_market_csv(path)
        assert len(data) == 3
        assert math.isnan(data.rk[1])
        assert data.close[1] == 101.0

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("date,price\n2020-01-02,100.0\n")
        with pytest.raises(ValueError, match="header"):
            em.load_market_csv(path)

    def test_bad_row_reports_line(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("date,close\n2020-01-02,100.0\n2020-01-03,oops\n")
        with pytest.raises(ValueError, match="line 3"):
            em.load_market_csv(path)

    def test_unsorted_dates_rejected(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("date,close\n2020-01-03,100.0\n2020-01-02,101.0\n")
        with pytest.raises(ValueError):
            em.load_market_csv(path)


class TestParamValidation:
    def test_invariants(self):
        with pytest.raises(ValueError):
            em.VolatilityModelParams(omega=0.0, gamma=0.1, beta=0.5)
        with pytest.raises(ValueError):
            em.VolatilityModelParams(omega=0.1, gamma=-0.1, beta=0.5)
        with pytest.raises(ValueError):
            em.VolatilityModelParams(omega=0.1, gamma=0.1, beta=1.0)
        with pytest.raises(ValueError):
            em.VolatilityModelParams(omega=0.1, gamma=0.1, beta=0.5, nu=2)
