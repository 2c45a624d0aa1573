"""Scoring functions for mean, VaR, and joint VaR/ES forecasts.

Every forecast target is scored by a consistent (elicitable) loss:

    mean        squared error          (x - mu)^2
    VaR         check / pinball loss   (1{x < v} - alpha) * (v - x)
    (VaR, ES)   joint quantile/ES loss, built from the pinball term plus
                a logistic tail weight on the ES component

``empirical_score`` averages the pointwise loss over a look-back window;
window selection compares these averages across windows.  All scores are
evaluated in double precision and are overflow-safe for large |e|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit


@dataclass(frozen=True)
class Mean:
    """Conditional-mean target, scored by squared error."""


@dataclass(frozen=True)
class VaR:
    """Value-at-Risk (alpha-quantile of the loss), scored by pinball loss."""

    alpha: float

    def __post_init__(self):
        _check_level(self.alpha)


@dataclass(frozen=True)
class VaRES:
    """Joint (VaR, ES) target, scored by the two-parameter joint loss."""

    alpha: float

    def __post_init__(self):
        _check_level(self.alpha)


ForecastTarget = Union[Mean, VaR, VaRES]


def param_dim(target: ForecastTarget) -> int:
    """Dimension of the parameter vector fitted for ``target``."""
    return 2 if isinstance(target, VaRES) else 1


def _check_level(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"tail level must lie strictly in (0, 1), got {alpha}")


def _check_finite(name: str, *values) -> None:
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{name} requires finite inputs")


def order_index(level: float, n: int) -> int:
    """1-based order-statistic index ceil(level * n).

    Exact multiples resolve down (level*n integral gives exactly level*n);
    a half-ulp guard absorbs float noise like 0.9 * 20 = 18.000000000000004.
    """
    return max(1, min(n, math.ceil(level * n - 1e-9)))


def tail_weight(e):
    """Logistic weight -exp(-e) / (1 + exp(-e)) on the ES tail terms.

    Strictly increasing with limit 0 as e -> +inf; evaluated stably for
    any magnitude of e.
    """
    return -expit(-np.asarray(e, dtype=float))


def tail_weight_integral(e):
    """Antiderivative log(1 + exp(-e)) of ``tail_weight``, vanishing at +inf."""
    return np.logaddexp(0.0, -np.asarray(e, dtype=float))


def squared_loss(x, mu):
    """Squared error (x - mu)^2."""
    _check_finite("squared_loss", x, mu)
    d = np.asarray(x, dtype=float) - np.asarray(mu, dtype=float)
    return d * d


def pinball_score(x, v, alpha: float):
    """Check-function score (1{x < v} - alpha) * (v - x).

    The indicator is strictly "x < v"; ties x == v contribute zero.
    """
    _check_level(alpha)
    _check_finite("pinball_score", x, v)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return ((x < v) - alpha) * (v - x)


def joint_vares_score(x, v, e, alpha: float):
    """Joint VaR/ES score at quantile estimate v and shortfall estimate e.

    pinball(x, v) + w(e) * 1{x >= v} * (v - x) / (1 - alpha)
                  + w(e) * (e - v) + softplus(-e)

    with w = ``tail_weight``.  As e -> +inf both tail terms vanish and the
    score reduces to the pinball score.
    """
    _check_level(alpha)
    _check_finite("joint_vares_score", x, v, e)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    e = np.asarray(e, dtype=float)
    w = tail_weight(e)
    base = ((x < v) - alpha) * (v - x)
    tail = w * (x >= v) * (v - x) / (1.0 - alpha)
    return base + tail + w * (e - v) - tail_weight_integral(e)


def pointwise_score(x, theta, target: ForecastTarget):
    """Loss of parameter vector ``theta`` at a single observation ``x``."""
    theta = np.asarray(theta, dtype=float)
    if isinstance(target, Mean):
        return squared_loss(x, theta[..., 0])
    if isinstance(target, VaR):
        return pinball_score(x, theta[..., 0], target.alpha)
    if isinstance(target, VaRES):
        return joint_vares_score(x, theta[..., 0], theta[..., 1], target.alpha)
    raise TypeError(f"unknown forecast target {target!r}")


def empirical_score(window, theta, target: ForecastTarget) -> float:
    """Average loss of ``theta`` over a window: (1/k) * sum of pointwise scores."""
    window = np.asarray(window, dtype=float)
    if window.size == 0:
        raise ValueError("empirical_score requires a non-empty window")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape[-1] != param_dim(target):
        raise ValueError(
            f"parameter dimension {theta.shape[-1]} does not match target {target!r}"
        )
    return float(np.mean(pointwise_score(window, theta, target)))


class WindowStats:
    """Sorted-order sufficient statistics of one window.

    Enables O(log k) empirical-score evaluation at arbitrary parameters,
    which the selection loop and the bootstrap hit thousands of times per
    window.  Sums are kept relative to the smallest observation: the
    pinball and tail terms only involve differences, and centering keeps
    them exact for degenerate (constant) windows instead of leaving
    cancellation noise.  ``prefix[r]`` is the sum of the r smallest
    centered observations.  Moment statistics are computed lazily; the
    quantile paths never need them.
    """

    __slots__ = ("values_sorted", "prefix", "center", "n", "_mean", "_var")

    def __init__(self, values_sorted: np.ndarray, prefix: np.ndarray,
                 center: float, n: int):
        self.values_sorted = values_sorted
        self.prefix = prefix
        self.center = center
        self.n = n
        self._mean = None
        self._var = None

    @property
    def total(self) -> float:
        return float(self.prefix[-1])

    @property
    def mean(self) -> float:
        if self._mean is None:
            self._mean = self.center + float(np.mean(self.values_sorted - self.center))
        return self._mean

    @property
    def var(self) -> float:
        """Mean squared deviation from the mean (divisor k)."""
        if self._var is None:
            self._var = float(np.mean((self.values_sorted - self.mean) ** 2))
        return self._var


def window_stats(window) -> WindowStats:
    """Precompute ``WindowStats`` for a window."""
    w = np.asarray(window, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("window must be a non-empty 1-d sequence")
    ws = np.sort(w)
    center = float(ws[0])
    prefix = np.concatenate(([0.0], np.cumsum(ws - center)))
    return WindowStats(ws, prefix, center, w.size)


def mean_score_at(stats: WindowStats, mu) -> np.ndarray:
    """Empirical squared-error score at mean estimates ``mu``.

    Uses the exact decomposition mean((x-mu)^2) = var + (mu - mean)^2,
    which is stable when comparing nearby mu.
    """
    mu = np.asarray(mu, dtype=float)
    d = mu - stats.mean
    return stats.var + d * d


def _tail_counts(stats: WindowStats, v: np.ndarray):
    n_lt = np.searchsorted(stats.values_sorted, v, side="left")
    s_lt = stats.prefix[n_lt]
    return n_lt, s_lt


def pinball_score_at(stats: WindowStats, v, alpha: float) -> np.ndarray:
    """Empirical pinball score at quantile estimates ``v``."""
    v = np.asarray(v, dtype=float)
    n_lt, s_lt = _tail_counts(stats, v)
    vc = v - stats.center
    below = (1.0 - alpha) * (n_lt * vc - s_lt)
    above = alpha * ((stats.total - s_lt) - (stats.n - n_lt) * vc)
    return (below + above) / stats.n


def tail_mean_at(stats: WindowStats, v) -> np.ndarray:
    """mean(1{x >= v} * (x - v)) over the window; nonnegative for v <= max."""
    v = np.asarray(v, dtype=float)
    n_lt, s_lt = _tail_counts(stats, v)
    vc = v - stats.center
    return ((stats.total - s_lt) - (stats.n - n_lt) * vc) / stats.n


def joint_score_at(stats: WindowStats, v, e, alpha: float) -> np.ndarray:
    """Empirical joint VaR/ES score at estimates ``(v, e)``."""
    v = np.asarray(v, dtype=float)
    e = np.asarray(e, dtype=float)
    w = tail_weight(e)
    return (
        pinball_score_at(stats, v, alpha)
        - w * tail_mean_at(stats, v) / (1.0 - alpha)
        + w * (e - v)
        - tail_weight_integral(e)
    )


def score_at(stats: WindowStats, theta: np.ndarray, target: ForecastTarget) -> np.ndarray:
    """Empirical score of parameter rows ``theta`` (shape (..., dim)) on a window."""
    theta = np.asarray(theta, dtype=float)
    if isinstance(target, Mean):
        return mean_score_at(stats, theta[..., 0])
    if isinstance(target, VaR):
        return pinball_score_at(stats, theta[..., 0], target.alpha)
    if isinstance(target, VaRES):
        return joint_score_at(stats, theta[..., 0], theta[..., 1], target.alpha)
    raise TypeError(f"unknown forecast target {target!r}")
