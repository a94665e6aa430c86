"""Reference (VaR, ES) forecasting methods and rolling out-of-sample evaluation.

Three standard methods: a variance recursion driven by an intra-daily realized
kernel measure, a GARCH(1,1) recursion driven by the squared daily return, and
unconditional historical simulation from a trailing window.  The recursive
models are fitted by Gaussian quasi-maximum likelihood and feed a scaled
Student-t distribution (six degrees of freedom by default) to turn a one-day
variance into a (VaR, ES) pair.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize, stats
from scipy.signal import lfilter

from .murphy import EvaluationSeries
from .scores import JointForecast, _require_level

logger = logging.getLogger(__name__)

DRIVERS = ("realized_kernel", "squared_return")
MODELS = ("heavy", "garch", "hs")


class FitConvergenceError(RuntimeError):
    """Raised when no optimizer start converges; carries the best parameters seen."""

    def __init__(self, message: str, params: "VolatilityModelParams"):
        super().__init__(message)
        self.params = params


@dataclass(frozen=True)
class VolatilityModelParams:
    """Coefficients of the one-day variance recursion plus distribution settings."""

    omega: float
    gamma: float
    beta: float
    driver: str = "squared_return"
    nu: int = 6

    def __post_init__(self) -> None:
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.gamma < 0 or self.beta < 0:
            raise ValueError("gamma and beta must be nonnegative")
        if not self.beta < 1:
            raise ValueError(f"beta must be below 1 for a stable recursion, got {self.beta}")
        if self.driver not in DRIVERS:
            raise ValueError(f"driver must be one of {DRIVERS}, got {self.driver!r}")
        if not self.nu > 2:
            raise ValueError(f"nu must exceed 2, got {self.nu}")


@dataclass(frozen=True)
class MarketData:
    """Daily closing levels with an optional realized kernel series.

    The realized kernel must be in units consistent with squared
    100-times-log returns; NaN marks missing days.
    """

    dates: np.ndarray
    close: np.ndarray
    rk: np.ndarray | None = None

    def __post_init__(self) -> None:
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        close = np.asarray(self.close, dtype=float)
        if dates.ndim != 1 or dates.size == 0:
            raise ValueError("dates must be a nonempty 1-d sequence")
        if close.shape != dates.shape:
            raise ValueError("close must align with dates")
        if dates.size > 1 and not np.all(dates[1:] > dates[:-1]):
            raise ValueError("dates must be strictly increasing")
        if not np.all(np.isfinite(close)) or np.any(close <= 0):
            raise ValueError("closing levels must be finite and positive")
        rk = self.rk
        if rk is not None:
            rk = np.asarray(rk, dtype=float)
            if rk.shape != dates.shape:
                raise ValueError("rk must align with dates")
            if np.any(rk[np.isfinite(rk)] < 0):
                raise ValueError("realized kernel values must be nonnegative")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "close", close)
        object.__setattr__(self, "rk", rk)

    def __len__(self) -> int:
        return int(self.dates.size)

    def without_missing_rk(self) -> "MarketData":
        """Drop days with a missing realized kernel, logging how many went."""
        if self.rk is None:
            raise ValueError("no realized kernel column present")
        keep = np.isfinite(self.rk)
        dropped = int((~keep).sum())
        if dropped:
            logger.warning("dropping %d day(s) with missing realized kernel", dropped)
            return MarketData(self.dates[keep], self.close[keep], self.rk[keep])
        return self


def load_market_csv(path) -> MarketData:
    """Read ``date,close[,rk]`` rows (ISO dates, UTF-8, comma-separated)."""
    path = Path(path)
    dates: list[str] = []
    close: list[float] = []
    rk: list[float] = []
    has_rk = False
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not {"date", "close"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: header must contain 'date' and 'close' columns")
        has_rk = "rk" in reader.fieldnames
        for row in reader:
            line = reader.line_num
            try:
                dates.append(np.datetime64(row["date"], "D"))
                close.append(float(row["close"]))
                if has_rk:
                    raw = (row["rk"] or "").strip()
                    rk.append(float(raw) if raw else math.nan)
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path} line {line}: {exc}") from exc
    try:
        return MarketData(
            dates=np.asarray(dates, dtype="datetime64[D]"),
            close=np.asarray(close),
            rk=np.asarray(rk) if has_rk else None,
        )
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class RollingConfig:
    """Rolling out-of-sample evaluation settings."""

    window: int = 1500
    refit_rule: str = "month_start"
    alpha: float = 0.025
    nu: int = 6

    def __post_init__(self) -> None:
        if self.window < 2:
            raise ValueError(f"window must be at least 2, got {self.window}")
        if self.refit_rule != "month_start":
            raise ValueError(f"unsupported refit rule {self.refit_rule!r}")
        _require_level(self.alpha)
        if not self.nu > 2:
            raise ValueError(f"nu must exceed 2, got {self.nu}")


def log_returns(data) -> np.ndarray:
    """100 times the day-over-day difference in log levels."""
    close = data.close if isinstance(data, MarketData) else np.asarray(data, dtype=float)
    if close.size < 2:
        raise ValueError("need at least two closing levels")
    if np.any(close <= 0) or not np.all(np.isfinite(close)):
        raise ValueError("closing levels must be finite and positive")
    return 100.0 * np.diff(np.log(close))


def student_t_quantile(p: float, nu: int) -> float:
    """Quantile of the unstandardized Student-t distribution.

    Evaluated through the lower tail only, so the median is exactly zero and
    q(p) = -q(1-p) holds up to the representation of the complement.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p!r}")
    if nu < 1:
        raise ValueError(f"nu must be at least 1, got {nu}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -float(stats.t.ppf(1.0 - p, df=nu))
    return float(stats.t.ppf(p, df=nu))


def student_t_es(alpha: float, nu: int) -> float:
    """Expected shortfall of the unstandardized Student-t at tail level alpha.

    Closed form: -(nu + q^2) / (nu - 1) * pdf(q) / alpha with q the alpha
    quantile, which equals the average of the quantiles over (0, alpha).
    """
    _require_level(alpha)
    if not nu > 1:
        raise ValueError(f"nu must exceed 1 for a finite tail mean, got {nu}")
    q = stats.t.ppf(alpha, df=nu)
    return float(-(nu + q * q) / (nu - 1) * stats.t.pdf(q, df=nu) / alpha)


def scaled_t_var_es(sigma: float, alpha: float, nu: int) -> JointForecast:
    """(VaR, ES) of a scaled Student-t with conditional variance sigma^2.

    The sqrt((nu-2)/nu) factor undoes the excess variance of the t
    distribution so that sigma^2 really is the conditional variance.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not nu > 2:
        raise ValueError(f"nu must exceed 2, got {nu}")
    scale = math.sqrt((nu - 2) / nu) * sigma
    var = scale * student_t_quantile(alpha, nu)
    es = scale * student_t_es(alpha, nu)
    assert var >= es
    return JointForecast(var=var, es=es)


def variance_recursion(
    omega: float, gamma: float, beta: float, lagged_drivers: np.ndarray, seed_var: float
) -> np.ndarray:
    """Run sigma2[t] = omega + gamma * driver[t-1] + beta * sigma2[t-1].

    ``lagged_drivers[k]`` feeds ``sigma2[k+1]``; the output has one more entry
    than the driver slice and starts at ``seed_var``.  The recursion is a
    first-order IIR filter, evaluated as such.
    """
    drivers = np.asarray(lagged_drivers, dtype=float)
    out = np.empty(drivers.size + 1)
    out[0] = seed_var
    if drivers.size:
        x = omega + gamma * drivers
        out[1:] = lfilter([1.0], [1.0, -beta], x, zi=[beta * seed_var])[0]
    return out


def _qml_negative_loglik(omega, gamma, beta, returns, drivers, seed_var) -> float:
    sig2 = variance_recursion(omega, gamma, beta, drivers[:-1], seed_var)
    body = sig2[1:]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        terms = np.log(body) + returns[1:] ** 2 / body
        value = 0.5 * float(terms.sum())
    return value if math.isfinite(value) else math.inf


_FIT_STARTS = ((0.3, 0.6), (0.1, 0.85), (0.05, 0.5))


def fit_qml(
    returns, driver_series, driver: str = "squared_return", nu: int = 6
) -> VolatilityModelParams:
    """Fit (omega, gamma, beta) by Gaussian quasi-maximum likelihood.

    The optimizer is a Nelder-Mead search over transformed parameters
    (log omega, log gamma, logit beta), restarted from three fixed initial
    points; the best converged start wins.  Raises ``FitConvergenceError``
    carrying the best parameters found when no start converges.
    """
    returns = np.asarray(returns, dtype=float)
    drivers = np.asarray(driver_series, dtype=float)
    if driver not in DRIVERS:
        raise ValueError(f"driver must be one of {DRIVERS}, got {driver!r}")
    if returns.ndim != 1 or returns.shape != drivers.shape:
        raise ValueError("returns and driver series must be 1-d and aligned")
    if returns.size < 10:
        raise ValueError(f"need at least 10 observations to fit, got {returns.size}")
    if not (np.all(np.isfinite(returns)) and np.all(np.isfinite(drivers))):
        raise ValueError("returns and drivers must be finite")
    if np.any(drivers < 0):
        raise ValueError("driver series must be nonnegative")
    if np.all(returns == returns[0]):
        raise ValueError("degenerate (constant) return series")
    sample_var = float(returns.var(ddof=1))
    if sample_var <= 0:
        raise ValueError("degenerate (constant) return series")
    mean_driver = float(drivers.mean())

    def unpack(theta):
        omega = math.exp(theta[0])
        gamma = math.exp(theta[1])
        beta = 1.0 / (1.0 + math.exp(-theta[2]))
        return omega, gamma, beta

    def objective(theta):
        try:
            omega, gamma, beta = unpack(theta)
        except OverflowError:
            return math.inf
        return _qml_negative_loglik(omega, gamma, beta, returns, drivers, sample_var)

    attempts = []
    for gamma0, beta0 in _FIT_STARTS:
        omega0 = max(sample_var * (1.0 - beta0) - gamma0 * mean_driver, 0.05 * sample_var)
        theta0 = np.array(
            [math.log(omega0), math.log(gamma0), math.log(beta0 / (1.0 - beta0))]
        )
        result = optimize.minimize(
            objective,
            theta0,
            method="Nelder-Mead",
            options={"maxiter": 5000, "xatol": 1e-8, "fatol": 1e-10},
        )
        attempts.append(result)

    converged = [r for r in attempts if r.success and math.isfinite(r.fun)]
    pool = converged or attempts
    best = min(pool, key=lambda r: r.fun)
    omega, gamma, beta = unpack(best.x)
    params = VolatilityModelParams(omega=omega, gamma=gamma, beta=beta, driver=driver, nu=nu)
    if not converged:
        raise FitConvergenceError(
            f"quasi-likelihood fit did not converge in {len(attempts)} starts", params
        )
    logger.info(
        "qml fit converged: omega=%.6g gamma=%.6g beta=%.6g (nll=%.6g)",
        omega, gamma, beta, best.fun,
    )
    return params


def hs_forecast(window_returns, alpha: float = 0.025) -> JointForecast:
    """Unconditional empirical (VaR, ES) from a trailing window.

    VaR is the k-th smallest return with k = ceil(alpha * n); ES averages the
    k smallest, so the pair always satisfies var >= es.
    """
    _require_level(alpha)
    window = np.asarray(window_returns, dtype=float)
    if window.ndim != 1 or window.size == 0:
        raise ValueError("window must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(window)):
        raise ValueError("window returns must be finite")
    k = math.ceil(alpha * window.size)
    if k < 1:
        raise ValueError("window too short for the requested tail level")
    tail = np.partition(window, k - 1)[:k]
    return JointForecast(var=float(tail.max()), es=float(tail.mean()))


def refit_schedule(dates, window: int) -> np.ndarray:
    """Day indices at which the recursive models are re-fitted.

    The out-of-sample range starts one day after ``window`` returns have
    accumulated; within it, every first trading day of a calendar month is a
    refit day.  The first out-of-sample day always carries an initial fit.
    """
    dates = np.asarray(dates, dtype="datetime64[D]")
    start = window + 1
    if start >= dates.size:
        raise ValueError(
            f"need more than window + 1 = {window + 1} days, got {dates.size}"
        )
    months = dates.astype("datetime64[M]")
    is_month_start = np.empty(dates.size, dtype=bool)
    is_month_start[0] = True
    is_month_start[1:] = months[1:] != months[:-1]
    indices = [start]
    for i in range(start + 1, dates.size):
        if is_month_start[i]:
            indices.append(i)
    return np.asarray(indices, dtype=int)


def _recursive_model_forecasts(data, driver_values, driver, config):
    returns_full = np.full(len(data), np.nan)
    returns_full[1:] = log_returns(data)
    window = config.window
    refits = refit_schedule(data.dates, window)
    bounds = list(refits) + [len(data)]
    sigmas = []
    for fit_at, seg_end in zip(bounds[:-1], bounds[1:]):
        lo = fit_at - window
        fit_returns = returns_full[lo:fit_at]
        fit_drivers = driver_values[lo:fit_at]
        params = fit_qml(fit_returns, fit_drivers, driver=driver, nu=config.nu)
        seed_var = float(fit_returns.var(ddof=1))
        sig2 = variance_recursion(
            params.omega, params.gamma, params.beta, driver_values[lo : seg_end - 1], seed_var
        )
        sigmas.append(np.sqrt(sig2[fit_at - lo :]))
    return np.concatenate(sigmas), refits


def rolling_evaluation(data: MarketData, model: str, config: RollingConfig = RollingConfig()):
    """Daily one-step-ahead forecasts over the out-of-sample range.

    Every forecast for day t uses data through day t-1 only: recursive models
    carry parameters from the most recent refit and update their variance
    state daily; historical simulation re-sorts its trailing window each day.
    Returns an ``EvaluationSeries`` with the method side filled in slot A.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    if model == "heavy":
        if data.rk is None:
            raise ValueError("the realized-kernel model needs an 'rk' column")
        data = data.without_missing_rk()
    n = len(data)
    window = config.window
    start = window + 1
    if start >= n:
        raise ValueError(f"need more than window + 1 = {window + 1} days, got {n}")
    returns_full = np.full(n, np.nan)
    returns_full[1:] = log_returns(data)
    oos = np.arange(start, n)

    if model == "hs":
        forecasts = [
            hs_forecast(returns_full[i - window : i], config.alpha) for i in oos
        ]
        var = np.array([f.var for f in forecasts])
        es = np.array([f.es for f in forecasts])
    else:
        driver_values = data.rk if model == "heavy" else returns_full**2
        driver = "realized_kernel" if model == "heavy" else "squared_return"
        sigma, _ = _recursive_model_forecasts(data, driver_values, driver, config)
        scale = math.sqrt((config.nu - 2) / config.nu)
        var = scale * sigma * student_t_quantile(config.alpha, config.nu)
        es = scale * sigma * student_t_es(config.alpha, config.nu)

    return EvaluationSeries(
        times=data.dates[oos],
        var_a=var,
        es_a=es,
        realizations=returns_full[oos],
    )


def evaluation_summary(series: EvaluationSeries, alpha: float = 0.025) -> dict:
    """Average forecasts and the VaR violation rate (should be close to alpha)."""
    _require_level(alpha)
    y = series.realizations
    return {
        "n": len(series),
        "avg_var": float(series.var_a.mean()),
        "avg_es": float(series.es_a.mean()),
        "violation_rate": float((y < series.var_a).mean()),
    }
