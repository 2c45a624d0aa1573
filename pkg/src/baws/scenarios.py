"""Synthetic nonstationary loss processes with ground-truth parameter paths.

Three families, all seeded and bit-reproducible:

    A1-A3   independent Gaussians with abrupt breaks in mean (and variance)
    B1-B3   independent Gaussians with smoothly drifting mean (sine path,
            random walk, geometric random walk)
    GARCH   sign-flipped GARCH(1,1) losses with standardized skewed-t
            innovations and a persistence jump at t = 1000

Each path carries its true mean/volatility sequences and, when a tail
level is supplied, the true VaR path (mu + sigma * z_alpha for Gaussians,
sigma times the flipped innovation quantile for the GARCH process).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, ndtri
from scipy.stats import t as student_t

GARCH_OMEGA = 1e-5
GARCH_ARCH = 0.04
GARCH_PERSISTENCE_LOW = 0.70
GARCH_PERSISTENCE_JUMP = 0.25
GARCH_BREAK_T = 1000
GARCH_BURN_IN = 200
GARCH_NU = 5.0
GARCH_SKEW = 0.95

SCENARIOS = ("A1", "A2", "A3", "B1", "B2", "B3", "GARCH")


@dataclass(frozen=True)
class ScenarioPath:
    """One simulated loss path plus index-aligned truth sequences."""

    name: str
    seed: int
    losses: np.ndarray
    true_mean: np.ndarray
    true_sigma: np.ndarray
    true_var: np.ndarray | None
    alpha: float | None
    innovations: str = "gaussian"  # "gaussian" | "skewt"
    nu: float | None = None
    skew: float | None = None


def _gaussian_path(name, seed, mu, sigma, alpha, rng) -> ScenarioPath:
    losses = mu + sigma * rng.standard_normal(mu.size)
    true_var = mu + sigma * ndtri(alpha) if alpha is not None else None
    return ScenarioPath(name, seed, losses, mu, np.broadcast_to(sigma, mu.shape).copy(),
                        true_var, alpha)


def _piecewise(t: np.ndarray, breaks: list[int], values: list[float]) -> np.ndarray:
    out = np.full(t.shape, values[-1], dtype=float)
    for b, v in zip(reversed(breaks), reversed(values[:-1])):
        out[t <= b] = v
    return out


def gen_setting_a(variant: str, T: int = 2000, seed: int = 0,
                  alpha: float | None = None) -> ScenarioPath:
    """Independent N(mu_t, sigma_t^2) draws with abrupt regime breaks."""
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = np.random.default_rng(seed)
    t = np.arange(1, T + 1)
    if variant == "A1":
        mu = np.where(t <= T // 2, 1.0, 2.0)
        sigma = np.full(T, 0.5)
    elif variant == "A2":
        mu = _piecewise(t, [800, 1400], [1.0, 0.0, 2.0])
        sigma = np.full(T, 0.5)
    elif variant == "A3":
        mu = _piecewise(t, [800, 1400], [1.0, 0.0, 2.0])
        sigma = np.sqrt(_piecewise(t, [800, 1400], [0.25, 1.0, 0.49]))
    else:
        raise ValueError(f"unknown variant {variant!r}, expected A1, A2 or A3")
    return _gaussian_path(variant, seed, mu, sigma, alpha, rng)


def gen_setting_b(variant: str, T: int = 2000, seed: int = 0,
                  alpha: float | None = None) -> ScenarioPath:
    """Independent Gaussians around a smoothly drifting mean path."""
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = np.random.default_rng(seed)
    t = np.arange(1, T + 1)
    sigma = np.full(T, 0.5)
    if variant == "B1":
        mu = np.sin(2.0 * np.pi * t / T)
    elif variant == "B2":
        # random walk from mu_0 = 0 with N(0, 1/T) increments
        mu = np.cumsum(rng.normal(0.0, np.sqrt(1.0 / T), size=T))
    elif variant == "B3":
        # geometric path mu_0 * exp((drift - s^2/2) t/T + s W_t), drift 0.5, s^2 0.25
        w = np.cumsum(rng.normal(0.0, np.sqrt(1.0 / T), size=T))
        mu = np.exp((0.5 - 0.125) * t / T + 0.5 * w)
    else:
        raise ValueError(f"unknown variant {variant!r}, expected B1, B2 or B3")
    return _gaussian_path(variant, seed, mu, sigma, alpha, rng)


def skewed_t_moments(nu: float, r: float) -> tuple[float, float]:
    """Mean and standard deviation of the unstandardized two-piece skewed t.

    The two-piece variable equals r|T| with probability r^2/(1+r^2) and
    -|T|/r otherwise, T ~ t_nu.  Closed first two moments:

        E|T|   = 2 sqrt(nu) Gamma((nu+1)/2) / (sqrt(pi) (nu-1) Gamma(nu/2))
        E X    = E|T| (r - 1/r)
        E X^2  = nu/(nu-2) * (r^3 + r^-3)/(r + 1/r)
    """
    if nu <= 2:
        raise ValueError("degrees of freedom must exceed 2 for a finite variance")
    if r <= 0:
        raise ValueError("skewness parameter must be positive")
    abs_moment = (
        2.0 * np.sqrt(nu) * np.exp(gammaln((nu + 1) / 2.0) - gammaln(nu / 2.0))
        / (np.sqrt(np.pi) * (nu - 1.0))
    )
    m = abs_moment * (r - 1.0 / r)
    msq = nu / (nu - 2.0) * (r**3 + r**-3) / (r + 1.0 / r)
    return float(m), float(np.sqrt(msq - m * m))


def skewed_t_sample(nu: float, r: float, rng: np.random.Generator, size=None):
    """Draw from the skewed t standardized to zero mean and unit variance.

    Sign-mixture construction: positive piece r|T| with probability
    r^2/(1+r^2), negative piece -|T|/r otherwise, then affine
    standardization by the closed-form moments.
    """
    m, s = skewed_t_moments(nu, r)
    scalar = size is None
    n = 1 if scalar else size
    t_abs = np.abs(student_t.rvs(nu, size=n, random_state=rng))
    positive = rng.random(n) < r * r / (1.0 + r * r)
    x = np.where(positive, r * t_abs, -t_abs / r)
    z = (x - m) / s
    return float(z[0]) if scalar else z


def skewed_t_quantile(p, nu: float, r: float):
    """Quantile of the standardized skewed t, by analytic two-piece inversion.

    The unstandardized CDF is 2/(1+r^2) * T_nu(r x) for x <= 0 and
    1 - 2 r^2/(1+r^2) * (1 - T_nu(x/r)) above, so inversion routes through
    the symmetric t quantile; the result is then standardized.
    """
    m, s = skewed_t_moments(nu, r)
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("quantile level must lie strictly in (0, 1)")
    split = 1.0 / (1.0 + r * r)
    lower = student_t.ppf(p * (1.0 + r * r) / 2.0, nu) / r
    upper = r * student_t.ppf(1.0 - (1.0 - p) * (1.0 + r * r) / (2.0 * r * r), nu)
    x = np.where(p < split, lower, upper)
    out = (x - m) / s
    return float(out) if out.ndim == 0 else out


def gen_garch(T: int = 2000, seed: int = 0, alpha: float | None = 0.95,
              nu: float = GARCH_NU, skew: float = GARCH_SKEW) -> ScenarioPath:
    """Loss path L_t = -sigma_t eps_t with GARCH(1,1) volatility.

    sigma_t^2 = 1e-5 + 0.04 L_{t-1}^2 + gamma_t sigma_{t-1}^2, with the
    persistence gamma jumping from 0.70 to 0.95 after t = 1000.  The
    recursion starts at the pre-break unconditional variance and a 200-step
    burn-in (discarded) washes out the initialization.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    rng = np.random.default_rng(seed)
    total = T + GARCH_BURN_IN
    eps = skewed_t_sample(nu, skew, rng, size=total)
    eps_sq = eps * eps
    var = np.empty(total)
    var[0] = GARCH_OMEGA / (1.0 - GARCH_ARCH - GARCH_PERSISTENCE_LOW)
    for u in range(1, total):
        t_real = u + 1 - GARCH_BURN_IN  # calendar time of step u
        gamma = GARCH_PERSISTENCE_LOW + (
            GARCH_PERSISTENCE_JUMP if t_real > GARCH_BREAK_T else 0.0
        )
        var[u] = GARCH_OMEGA + (GARCH_ARCH * eps_sq[u - 1] + gamma) * var[u - 1]
    sigma = np.sqrt(var[GARCH_BURN_IN:])
    losses = -sigma * eps[GARCH_BURN_IN:]
    true_var = None
    if alpha is not None:
        # L_t = sigma_t * (-eps); quantile of -eps at alpha is -q_eps(1 - alpha)
        true_var = sigma * (-skewed_t_quantile(1.0 - alpha, nu, skew))
    return ScenarioPath("GARCH", seed, losses, np.zeros(T), sigma, true_var, alpha,
                        innovations="skewt", nu=nu, skew=skew)


def generate(name: str, T: int = 2000, seed: int = 0,
             alpha: float | None = None) -> ScenarioPath:
    """Generate a scenario path by name (A1-A3, B1-B3, GARCH)."""
    key = name.upper()
    if key in ("A1", "A2", "A3"):
        return gen_setting_a(key, T, seed, alpha)
    if key in ("B1", "B2", "B3"):
        return gen_setting_b(key, T, seed, alpha)
    if key == "GARCH":
        return gen_garch(T, seed, alpha if alpha is not None else 0.95)
    raise ValueError(f"unknown scenario {name!r}")
