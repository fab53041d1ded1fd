"""Stylised-facts battery for price series.

Given a price path (empirical micro-prices or simulated mid-prices) this
module computes log returns, their distribution moments, a normal QQ
table, and autocorrelation functions of the returns, the absolute
returns, and the order-flow signs. Heavy-tailed returns, fast ACF decay
for signed returns, and slow positive decay for absolute returns are the
signatures the battery is designed to expose.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .exceptions import DataError

# cap on QQ table length so report files stay small
QQ_POINTS = 201


def acf(x, lags: int) -> np.ndarray:
    """Sample autocorrelation at lags ``0..lags`` by the direct sum.

    Uses the biased estimator (denominator is the full-sample sum of
    squares), which keeps every value in ``[-1, 1]``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if lags < 0:
        raise DataError("lags must be non-negative")
    if n < lags + 1:
        raise DataError(f"need at least {lags + 1} observations for {lags} lags, got {n}")
    centered = x - x.mean()
    denom = float(centered @ centered)
    if denom <= 0.0:
        raise DataError("constant series has no autocorrelation")
    out = np.empty(lags + 1)
    out[0] = 1.0
    for k in range(1, lags + 1):
        out[k] = float(centered[k:] @ centered[:-k]) / denom
    return out


def tick_rule_signs(prices) -> np.ndarray:
    """Order-flow signs from price changes.

    Upticks map to +1, downticks to -1, and zero ticks inherit the most
    recent non-zero sign. Leading zero ticks (no prior direction) are
    dropped.
    """
    prices = np.asarray(prices, dtype=float)
    raw = np.sign(np.diff(prices))
    signs = []
    last = 0.0
    for s in raw:
        if s != 0.0:
            last = s
        if last != 0.0:
            signs.append(last)
    return np.asarray(signs)


def qq_table(values, points: int = QQ_POINTS):
    """Paired (theoretical, empirical) normal quantiles of a sample.

    The sample is standardised first, so a normal input lies on the
    diagonal. Probabilities follow the (i - 1/2)/m convention on a grid
    of at most ``points`` entries.
    """
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        raise DataError("need at least 3 observations for quantiles")
    sd = values.std(ddof=1)
    if sd <= 0.0:
        raise DataError("constant series has no quantile spread")
    z = (values - values.mean()) / sd
    m = min(values.size, points)
    probs = (np.arange(1, m + 1) - 0.5) / m
    theoretical = stats.norm.ppf(probs)
    empirical = np.quantile(z, probs)
    return theoretical, empirical


@dataclass
class FactsReport:
    """Summary statistics of a return series.

    ``return_moments`` holds (mean, std, skew, excess kurtosis) of the
    log returns; the ACF arrays start at lag 0; ``qq_points`` is a pair
    of matched theoretical/empirical quantile arrays; ``n`` is the
    number of returns, from which the white-noise band follows.
    """

    return_moments: dict
    acf_returns: np.ndarray
    acf_abs_returns: np.ndarray
    acf_orderflow: Optional[np.ndarray]
    qq_points: tuple
    n: int

    @property
    def white_noise_band(self) -> float:
        """95% half-width for the ACF of an i.i.d. series."""
        return 1.96 / np.sqrt(self.n)

    def rows(self):
        """ACF table as (lag, returns, abs_returns, orderflow) rows."""
        out = []
        for k in range(self.acf_returns.size):
            flow = self.acf_orderflow[k] if self.acf_orderflow is not None else ""
            out.append((k, self.acf_returns[k], self.acf_abs_returns[k], flow))
        return out


def return_moments(returns) -> dict:
    returns = np.asarray(returns, dtype=float)
    if returns.size < 8:
        raise DataError("too few returns for moment estimates")
    return {
        "mean": float(returns.mean()),
        "std": float(returns.std(ddof=1)),
        "skew": float(stats.skew(returns)),
        "excess_kurtosis": float(stats.kurtosis(returns)),
    }


def facts(prices, orderflow_signs=None, lags: int = 50) -> FactsReport:
    """Full stylised-facts battery for a price path.

    Log returns are taken from ``prices``; ``orderflow_signs`` defaults
    to the tick rule applied to the same path. Requires at least
    ``2 * lags`` returns so every ACF lag is estimated from a
    reasonable overlap.
    """
    prices = np.asarray(prices, dtype=float)
    if np.any(prices <= 0.0):
        raise DataError("prices must be positive for log returns")
    returns = np.diff(np.log(prices))
    if returns.size < max(2 * lags, 8):
        raise DataError(
            f"need at least {max(2 * lags, 8)} returns for lags={lags}, got {returns.size}"
        )
    if orderflow_signs is None:
        orderflow_signs = tick_rule_signs(prices)
    else:
        orderflow_signs = np.asarray(orderflow_signs, dtype=float)

    flow_acf = None
    if orderflow_signs.size >= lags + 1:
        try:
            flow_acf = acf(orderflow_signs, lags)
        except DataError:
            flow_acf = None  # constant flow, leave the column empty

    return FactsReport(
        return_moments=return_moments(returns),
        acf_returns=acf(returns, lags),
        acf_abs_returns=acf(np.abs(returns), lags),
        acf_orderflow=flow_acf,
        qq_points=qq_table(returns),
        n=returns.size,
    )
