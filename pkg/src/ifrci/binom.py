"""Binomial probability kernels and exact Clopper-Pearson intervals.

Probabilities are computed in log space through the log-gamma function and
only exponentiated at the end. Tail probabilities sum whichever tail does
not contain the mean, so small tails keep their relative accuracy.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, xlog1py, xlogy

from ._search import bisect_edge
from ._validation import check_count, check_probability
from .exceptions import DomainError

#: Absolute tolerance of the Clopper-Pearson bisection on the probability scale.
CP_TOL = 1e-10


@dataclass(frozen=True)
class Interval:
    """A closed interval on a rate scale; ``upper`` may be ``math.inf``."""

    lower: float
    upper: float

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise DomainError("interval endpoints must not be NaN")
        if self.lower < 0 or self.upper < self.lower:
            raise DomainError(f"invalid interval [{self.lower}, {self.upper}]")

    @property
    def unbounded_upper(self):
        return math.isinf(self.upper)

    @property
    def width(self):
        return self.upper - self.lower

    def __contains__(self, value):
        return self.lower <= value <= self.upper

    def __iter__(self):
        yield self.lower
        yield self.upper


def binom_logpmf(k, n, p):
    """Vectorised log P(X = k) for X ~ Binomial(n, p).

    ``k`` and ``n`` broadcast against each other; entries with ``k`` outside
    ``[0, n]`` give ``-inf``. ``p`` must be a scalar in [0, 1].
    """
    k = np.asarray(k)
    n = np.asarray(n)
    valid = (k >= 0) & (k <= n)
    kk = np.where(valid, k, 0)
    rest = np.where(valid, n - k, 0)
    out = (
        gammaln(n + 1.0)
        - gammaln(kk + 1.0)
        - gammaln(rest + 1.0)
        + xlogy(kk, p)
        + xlog1py(rest, -p)
    )
    return np.where(valid, out, -np.inf)


def _check_params(n, p):
    return check_count(n, "n"), check_probability(p, "p")


def binom_pmf(k, n, p):
    """P(X = k) for X ~ Binomial(n, p); raises DomainError unless 0 <= k <= n."""
    n, p = _check_params(n, p)
    k = check_count(k, "k", minimum=None)
    if not 0 <= k <= n:
        raise DomainError(f"k={k} outside [0, {n}]")
    return float(np.exp(binom_logpmf(k, n, p)))


def _log_tail_sum(lo, hi, n, p):
    if hi < lo:
        return -np.inf
    return float(logsumexp(binom_logpmf(np.arange(lo, hi + 1), n, p)))


def binom_cdf(k, n, p):
    """P(X <= k); k < 0 gives 0 and k >= n gives 1."""
    n, p = _check_params(n, p)
    k = check_count(k, "k", minimum=None)
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    if k < n * p:
        return min(1.0, math.exp(_log_tail_sum(0, k, n, p)))
    return max(0.0, 1.0 - math.exp(_log_tail_sum(k + 1, n, n, p)))


def binom_sf(k, n, p):
    """P(X >= k), summed directly when it is the smaller tail."""
    n, p = _check_params(n, p)
    k = check_count(k, "k", minimum=None)
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    if k > n * p:
        return min(1.0, math.exp(_log_tail_sum(k, n, n, p)))
    return max(0.0, 1.0 - math.exp(_log_tail_sum(0, k - 1, n, p)))


def clopper_pearson(k, n, level=0.95):
    """Exact equal-tailed confidence interval for a binomial proportion.

    Parameters
    ----------
    k : int
        Number of successes, ``0 <= k <= n``.
    n : int
        Number of trials.
    level : float
        Confidence level ``1 - alpha`` in (0, 1).

    Returns
    -------
    Interval
        ``[L, U]`` where ``P(Bin(n, L) >= k) = alpha/2`` and
        ``P(Bin(n, U) <= k) = alpha/2``; ``L = 0`` when ``k = 0`` and
        ``U = 1`` when ``k = n``.
    """
    n = check_count(n, "n")
    k = check_count(k, "k", minimum=None)
    level = check_probability(level, "level", open_left=True, open_right=True)
    if not 0 <= k <= n:
        raise DomainError(f"k={k} outside [0, {n}]")
    half = 0.5 * (1.0 - level)
    if n == 0:
        return Interval(0.0, 1.0)
    if k == 0:
        return Interval(0.0, 1.0 - half ** (1.0 / n))
    if k == n:
        return Interval(half ** (1.0 / n), 1.0)
    lo_in, lo_out = bisect_edge(lambda q: binom_sf(k, n, q) <= half, 0.0, 1.0, CP_TOL)
    hi_in, hi_out = bisect_edge(lambda q: binom_cdf(k, n, q) <= half, 1.0, 0.0, CP_TOL)
    return Interval(0.5 * (lo_in + lo_out), 0.5 * (hi_in + hi_out))
