"""Adaptive look-back window selection by pairwise stability testing.

At each time step a sparse grid of candidate windows is built from the
available history (anchored at the previously selected window when known).
Every candidate k is compared against each smaller candidate i: the fit on
window k is re-scored on window i and the excess over window i's own fit
is tested against a threshold tau(t, i).  A candidate survives when no
comparison rejects, and the largest surviving window is selected.

Thresholds come from a pluggable policy: a ``BootstrapConfig`` (calibrated
from the data), or any object exposing ``threshold_for(window_length)``
(deterministic families, fixed constants, user-supplied rules).  With the
default error control each comparison runs at level 1 - beta; the "fwer"
mode tightens pairwise levels by a Bonferroni split across the comparisons
of each candidate, re-quantiling the cached bootstrap gap samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple

import numpy as np
from scipy.special import ndtr

from .bootstrap import BootstrapConfig, bootstrap_gaps, empirical_quantile, order_index
from .estimators import FitResult, fit_from_stats
from .scoring import ForecastTarget, score_at, window_stats

_GAP_SLACK = 1e-9


@dataclass(frozen=True)
class CandidateGridConfig:
    """Increasing-interval grid of candidate window lengths.

    ``bands`` lists (start, step) pairs: within [start, next_start) the grid
    holds the multiples of step.  The minimum window, the previous selection,
    and the largest usable window are always included.  Above a previous
    selection, exploration proceeds at ``explore_step`` from prev_k + 1.
    """

    k_min: int = 20
    max_window: int | None = None
    bands: tuple[tuple[int, int], ...] = ((0, 5), (50, 10), (100, 20), (300, 50), (1000, 100))
    explore_step: int = 50

    def __post_init__(self):
        if self.k_min < 2:
            raise ValueError("k_min must be >= 2")
        if self.max_window is not None and self.max_window < self.k_min:
            raise ValueError("max_window must be >= k_min")
        starts = [b[0] for b in self.bands]
        if sorted(starts) != starts or len(set(starts)) != len(starts):
            raise ValueError("band starts must be strictly increasing")
        if any(step < 1 for _, step in self.bands):
            raise ValueError("band steps must be positive")
        if self.explore_step < 1:
            raise ValueError("explore_step must be positive")


@dataclass(frozen=True)
class FixedThreshold:
    """Constant threshold, independent of the window length."""

    value: float

    def threshold_for(self, window_length: int) -> float:
        return self.value


@dataclass(frozen=True)
class CallableThreshold:
    """Adapter wrapping any window-length -> threshold rule."""

    fn: Callable[[int], float]

    def threshold_for(self, window_length: int) -> float:
        return float(self.fn(window_length))


class PairDecision(NamedTuple):
    reference: int
    candidate: int
    gap: float
    threshold: float
    reject: int


@dataclass(frozen=True)
class SelectionTrace:
    """Full record of one selection step (pairs stored as parallel arrays)."""

    time_index: int
    candidates: np.ndarray
    pair_reference: np.ndarray
    pair_candidate: np.ndarray
    pair_gap: np.ndarray
    pair_threshold: np.ndarray
    pair_reject: np.ndarray
    admissible: np.ndarray
    k_hat: int
    theta_hat: np.ndarray
    fit: FitResult

    def pair_records(self) -> Iterator[PairDecision]:
        for r, k, g, tau, rej in zip(
            self.pair_reference, self.pair_candidate, self.pair_gap,
            self.pair_threshold, self.pair_reject,
        ):
            yield PairDecision(int(r), int(k), float(g), float(tau), int(rej))


def _band_points(cfg: CandidateGridConfig, lo: int, hi: int) -> list[int]:
    """Grid points (multiples of the band step) within [lo, hi]."""
    pts: list[int] = []
    bands = list(cfg.bands)
    for idx, (start, step) in enumerate(bands):
        end = bands[idx + 1][0] if idx + 1 < len(bands) else hi + 1
        first = max(start, lo, step)
        first = ((first + step - 1) // step) * step
        last = min(end - 1, hi)
        pts.extend(range(first, last + 1, step))
    return pts


def candidate_windows(history_length: int, prev_k: int | None = None,
                      cfg: CandidateGridConfig = CandidateGridConfig()) -> list[int]:
    """Ordered candidate window set for the current step."""
    if history_length < cfg.k_min:
        raise ValueError(
            f"insufficient history: {history_length} observations, k_min={cfg.k_min}"
        )
    limit = history_length
    if cfg.max_window is not None:
        limit = min(limit, cfg.max_window)
    pts = {cfg.k_min, limit}
    if prev_k is None:
        pts.update(_band_points(cfg, cfg.k_min, limit))
    else:
        anchor = min(prev_k, limit)
        pts.update(_band_points(cfg, cfg.k_min, anchor))
        pts.add(anchor)
        pts.update(range(anchor + 1, limit + 1, cfg.explore_step))
    return sorted(pts)


def pairwise_test(gap: float, tau: float) -> int:
    """1 if the score gap strictly exceeds the threshold, else 0."""
    if gap < 0:
        raise ValueError("score gap must be nonnegative")
    return int(gap > tau)


def bonferroni_level(beta: float, comparisons: int) -> float:
    """Quantile level 1 - (1 - beta)/s controlling the familywise rate
    across s pairwise comparisons at union-bound level 1 - beta."""
    if comparisons < 1:
        raise ValueError("comparisons must be >= 1")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    return 1.0 - (1.0 - beta) / comparisons


def rejection_probability_gaussian(mu1: float, mu2: float, var1: float, var2: float,
                                   k: int, k0: int, tau: float) -> float:
    """Probability that the squared mean gap between nested windows exceeds tau.

    Two independent Gaussian regimes: the k-window holds k - k0 draws from
    N(mu1, var1) followed by k0 draws from N(mu2, var2); the reference window
    is the last k0 draws.  The mean gap is Gaussian with

        m = (k - k0)/k * (mu1 - mu2)
        v = ((k - k0)/k)^2 * (var1/(k - k0) + var2/k0)

    and the exceedance probability of its square over tau is the two-sided
    normal tail at +-sqrt(tau).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if not k > k0 >= 1:
        raise ValueError("need k > k0 >= 1")
    if var1 <= 0 or var2 <= 0:
        raise ValueError("variances must be positive")
    frac = (k - k0) / k
    m = frac * (mu1 - mu2)
    v = frac * frac * (var1 / (k - k0) + var2 / k0)
    root = np.sqrt(tau)
    sd = np.sqrt(v)
    return float(1.0 - ndtr((root - m) / sd) + ndtr((-root - m) / sd))


def select_window(history, target: ForecastTarget, policy,
                  grid: CandidateGridConfig = CandidateGridConfig(),
                  prev_k: int | None = None, *,
                  time_index: int | None = None,
                  error_control: str = "pcer") -> SelectionTrace:
    """Select the largest admissible window from ``history``.

    ``policy`` is a ``BootstrapConfig`` or any object with
    ``threshold_for(window_length)``.  ``time_index`` keys the bootstrap
    streams (defaults to len(history) + 1, the forecast time in an online
    run).  Returns the full decision trace; the smallest candidate has no
    references and is always admissible, so a selection always exists.
    """
    if error_control not in ("pcer", "fwer"):
        raise ValueError(f"error_control must be 'pcer' or 'fwer', got {error_control!r}")
    x = np.asarray(history, dtype=float)
    if x.ndim != 1:
        raise ValueError("history must be 1-dimensional")
    n = x.size
    t = time_index if time_index is not None else n + 1
    candidates = candidate_windows(n, prev_k, grid)

    bootstrap_policy = isinstance(policy, BootstrapConfig)
    if error_control == "fwer" and not bootstrap_policy:
        raise ValueError("error_control='fwer' requires a bootstrap policy")
    if not bootstrap_policy and not hasattr(policy, "threshold_for"):
        raise TypeError(f"unsupported threshold policy {policy!r}")

    stats = {k: window_stats(x[n - k:]) for k in candidates}

    # one threshold calibration per reference window, shared by all pairs;
    # the bootstrap already fits the reference window, so reuse that fit
    fits: dict[int, FitResult] = {}
    taus: dict[int, float] = {}
    sorted_gaps: dict[int, np.ndarray] = {}
    for i in candidates[:-1]:
        if bootstrap_policy:
            gaps, fits[i] = bootstrap_gaps(x[n - i:], target, policy,
                                           time_index=t, stats=stats[i])
            if error_control == "fwer":
                g = np.sort(gaps)
                sorted_gaps[i] = g
                taus[i] = float(g[order_index(policy.beta, g.size) - 1])
            else:
                taus[i] = empirical_quantile(gaps, policy.beta)
        else:
            fits[i] = fit_from_stats(stats[i], target)
            taus[i] = float(policy.threshold_for(i))
    top = candidates[-1]
    fits[top] = fit_from_stats(stats[top], target)

    refs, cands, gap_col, tau_col = [], [], [], []
    theta_rows = np.vstack([fits[k].theta for k in candidates])
    for pos, i in enumerate(candidates[:-1]):
        larger = candidates[pos + 1:]
        raw = score_at(stats[i], theta_rows[pos + 1:], target) - fits[i].score
        floor = -_GAP_SLACK * max(1.0, abs(fits[i].score))
        if raw.min() < floor:
            raise AssertionError("negative pairwise gap beyond rounding tolerance")
        gaps_i = np.maximum(raw, 0.0)
        refs.extend([i] * len(larger))
        cands.extend(larger)
        gap_col.append(gaps_i)
        if error_control == "pcer":
            tau_col.append(np.full(len(larger), taus[i]))
        else:
            g = sorted_gaps[i]
            pair_taus = []
            for k in larger:
                s = candidates.index(k)  # number of references below k
                level = bonferroni_level(policy.beta, s)
                pair_taus.append(float(g[order_index(level, g.size) - 1]))
            tau_col.append(np.asarray(pair_taus))

    pair_reference = np.asarray(refs, dtype=np.int64)
    pair_candidate = np.asarray(cands, dtype=np.int64)
    pair_gap = np.concatenate(gap_col) if gap_col else np.empty(0)
    pair_threshold = np.concatenate(tau_col) if tau_col else np.empty(0)
    pair_reject = pair_gap > pair_threshold

    cand_arr = np.asarray(candidates, dtype=np.int64)
    admissible = np.ones(cand_arr.size, dtype=bool)
    if pair_reject.any():
        rejected = np.unique(pair_candidate[pair_reject])
        admissible[np.isin(cand_arr, rejected)] = False
    k_hat = int(cand_arr[admissible][-1])

    # pairs ordered by ascending candidate, then reference
    order = np.lexsort((pair_reference, pair_candidate))
    return SelectionTrace(
        time_index=t,
        candidates=cand_arr,
        pair_reference=pair_reference[order],
        pair_candidate=pair_candidate[order],
        pair_gap=pair_gap[order],
        pair_threshold=pair_threshold[order],
        pair_reject=pair_reject[order],
        admissible=admissible,
        k_hat=k_hat,
        theta_hat=fits[k_hat].theta,
        fit=fits[k_hat],
    )
