"""Power-law likelihood ratio test used as the structural-similarity gate.

Two graphs are compared through the degree multisets D_G (degrees >= d_min).
A scaling parameter is fitted per sample, per-sample log-likelihoods are
combined into the ratio statistic, and a perturbed graph is accepted only
when the statistic stays strictly below a threshold tau.

The printed form of the log-likelihood carries a middle term
|D| * alpha * log(alpha); the standard derivation has log(d_min) there
instead.  Both are implemented, selectable via `variant`:

    "log-alpha"  (default)  l = n*log(a) + n*a*log(a)     - (a+1)*sum(log d)
    "log-dmin"              l = n*log(a) + n*a*log(d_min) - (a+1)*sum(log d)

All logarithms are natural; changing the base would silently rescale the
statistic against any fixed tau.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .graphs import Graph, degree_multiset

DEFAULT_TAU = 0.000157
DEFAULT_D_MIN = 2

VARIANTS = ("log-alpha", "log-dmin")


class DegenerateSampleError(ValueError):
    """Degree sample is empty or has a vanishing log-sum denominator."""


def _as_sample(degrees: Iterable, d_min: int) -> np.ndarray:
    if d_min < 1:
        raise ValueError("d_min must be >= 1")
    arr = np.asarray(list(degrees) if not isinstance(degrees, np.ndarray) else degrees,
                     dtype=np.float64)
    if arr.size == 0:
        raise DegenerateSampleError("degenerate degree sample: empty multiset")
    if np.any(arr < d_min):
        raise ValueError(f"degree sample contains values below d_min={d_min}")
    return arr


def estimate_alpha(degrees: Iterable, d_min: int = DEFAULT_D_MIN) -> float:
    """Continuous-approximation estimate of the power-law scaling parameter."""
    arr = _as_sample(degrees, d_min)
    denom = float(np.log(arr / (d_min - 0.5)).sum())
    if denom <= 0.0:
        raise DegenerateSampleError("degenerate degree sample: zero log-sum denominator")
    return 1.0 + arr.size / denom


def log_likelihood(degrees: Iterable, d_min: int = DEFAULT_D_MIN,
                   variant: str = "log-alpha") -> float:
    """Log-likelihood of a degree sample under its own fitted exponent."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    arr = _as_sample(degrees, d_min)
    alpha = estimate_alpha(arr, d_min)
    n = arr.size
    sum_log = float(np.log(arr).sum())
    mid = math.log(alpha) if variant == "log-alpha" else math.log(d_min)
    return n * math.log(alpha) + n * alpha * mid - (alpha + 1.0) * sum_log


def ratio_statistic(g: Graph, g_a: Graph, d_min: int = DEFAULT_D_MIN,
                    variant: str = "log-alpha") -> float:
    """Two-sample ratio statistic on the degree multisets of two graphs."""
    d1 = degree_multiset(g, d_min)
    d2 = degree_multiset(g_a, d_min)
    both = np.concatenate([d1, d2])
    return (-2.0 * log_likelihood(both, d_min, variant)
            + 2.0 * log_likelihood(d1, d_min, variant)
            + 2.0 * log_likelihood(d2, d_min, variant))


def passes_test(g: Graph, g_a: Graph, tau: float = DEFAULT_TAU,
                d_min: int = DEFAULT_D_MIN, variant: str = "log-alpha") -> bool:
    """True iff the ratio statistic is strictly below tau."""
    return ratio_statistic(g, g_a, d_min, variant) < tau
