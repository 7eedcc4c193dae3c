"""Two-binomial model for the ratio statistic deaths / estimated infections.

For a hypothesised number of infections ``n_I`` and fatality rate
``theta0``, the simulated sample positives ``N_P* ~ Bin(N_S, n_I/N_T)`` and
deaths ``N_D* ~ Bin(n_I, theta0)`` are independent. The statistic is
``T = N_D* / (N_T * N_P* / N_S)``, with ``T = 0`` when both counts are zero
and ``T = inf`` when ``N_P* = 0 < N_D*``.

The exact evaluator decomposes ``P(T <= c)`` over the values of ``N_P*``;
each term is a binomial tail of ``N_D*`` at an integer threshold. Both
binomials are evaluated on a window of ``mean +/- (10 sd + 25)``, outside of
which the neglected mass is below 1e-16.
"""

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from ._validation import check_count, check_probability
from .binom import binom_logpmf
from .exceptions import DomainError, NoPositivesError

#: Relative tolerance applied when a threshold ``c * N_T * p / N_S`` lands on
#: an integer, so round-off cannot flip an inclusive boundary.
TIE_EPS = 1e-9

_WINDOW_SD = 10.0
_WINDOW_PAD = 25.0


@dataclass(frozen=True)
class StudyCounts:
    """Observed aggregates of a seroprevalence study."""

    n_total: int
    n_sample: int
    n_positive: int
    n_deaths: int

    def __post_init__(self):
        nt = check_count(self.n_total, "n_total", minimum=1)
        ns = check_count(self.n_sample, "n_sample", minimum=1)
        npos = check_count(self.n_positive, "n_positive")
        nd = check_count(self.n_deaths, "n_deaths")
        if ns > nt:
            raise DomainError(f"n_sample ({ns}) exceeds n_total ({nt})")
        if npos > ns:
            raise DomainError(f"n_positive ({npos}) exceeds n_sample ({ns})")
        if nd > nt:
            raise DomainError(f"n_deaths ({nd}) exceeds n_total ({nt})")
        for name, val in (("n_total", nt), ("n_sample", ns), ("n_positive", npos), ("n_deaths", nd)):
            object.__setattr__(self, name, val)

    @property
    def n_infected_hat(self):
        return self.n_total * self.n_positive / self.n_sample


@dataclass(frozen=True)
class ModelPoint:
    """A hypothesised (number of infections, fatality rate) pair."""

    n_infected: int
    theta0: float

    def __post_init__(self):
        object.__setattr__(self, "n_infected", check_count(self.n_infected, "n_infected"))
        object.__setattr__(self, "theta0", check_probability(self.theta0, "theta0"))

    def check_against(self, counts):
        if self.n_infected > counts.n_total:
            raise DomainError(
                f"n_infected ({self.n_infected}) exceeds n_total ({counts.n_total})"
            )


@dataclass(frozen=True)
class ModelDraw:
    n_positive_star: int
    n_deaths_star: int
    statistic: float


@dataclass(frozen=True)
class EvalMode:
    """How distribution functions of the statistic are evaluated.

    ``mode`` is ``"exact"`` (default) or ``"monte_carlo"``; the latter uses
    ``replications`` draws from the stream seeded by ``seed``.
    """

    mode: str = "exact"
    replications: int = 200_000
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "monte_carlo"):
            raise DomainError(f"mode must be 'exact' or 'monte_carlo', got {self.mode!r}")
        object.__setattr__(self, "replications", check_count(self.replications, "replications", 1))
        seed = check_count(self.seed, "seed")
        if seed >= 2**64:
            raise DomainError("seed must fit in 64 bits")
        object.__setattr__(self, "seed", seed)


def estimate(counts):
    """Return ``(n_infected_hat, theta_hat)`` for the observed counts.

    ``n_infected_hat = N_T * N_P / N_S`` is not rounded. Raises
    :class:`NoPositivesError` when ``N_P = 0``; the error carries
    ``n_infected_hat = 0``.
    """
    n_i_hat = counts.n_infected_hat
    if counts.n_positive == 0:
        raise NoPositivesError(n_infected_hat=0.0)
    return n_i_hat, counts.n_deaths / n_i_hat


def observed_statistic(counts):
    """The observed ratio under the zero-denominator convention (0/0 = 0, x/0 = inf)."""
    if counts.n_positive == 0:
        return 0.0 if counts.n_deaths == 0 else math.inf
    return counts.n_deaths / counts.n_infected_hat


def _statistic(n_pos, n_dead, counts):
    if n_pos == 0:
        return 0.0 if n_dead == 0 else math.inf
    return n_dead * counts.n_sample / (counts.n_total * n_pos)


def sample_model(point, counts, rng):
    """Draw one ``(N_P*, N_D*, T)`` triple from ``rng`` (a numpy Generator)."""
    point.check_against(counts)
    n_pos = int(rng.binomial(counts.n_sample, point.n_infected / counts.n_total))
    n_dead = int(rng.binomial(point.n_infected, point.theta0))
    return ModelDraw(n_pos, n_dead, _statistic(n_pos, n_dead, counts))


def _draw_block(point, counts, seed, block, size):
    p_star = _rng.stream(seed, block, 0).binomial(
        counts.n_sample, point.n_infected / counts.n_total, size
    )
    d_star = _rng.stream(seed, block, 1).binomial(point.n_infected, point.theta0, size)
    return p_star, d_star


def sample_counts(point, counts, mode):
    """Draw ``mode.replications`` pairs ``(N_P*, N_D*)`` as two int arrays.

    Draw ``i`` depends only on ``(seed, i // BLOCK_SIZE)``, not on how the
    blocks are scheduled.
    """
    point.check_against(counts)
    parts = [_draw_block(point, counts, mode.seed, b, size) for b, size in _rng.blocks(mode.replications)]
    return np.concatenate([p for p, _ in parts]), np.concatenate([d for _, d in parts])


# Integer thresholds, indexed by the value p of N_P*, such that the event on
# T is equivalent to an event on N_D* relative to the threshold.

def _scaled(c, counts):
    p = np.arange(counts.n_sample + 1)
    return c * counts.n_total * p / counts.n_sample


def _le_thresholds(c, counts):
    """T <= c  iff  N_D* <= thr[p]."""
    if math.isinf(c):
        return np.full(counts.n_sample + 1, counts.n_total, dtype=np.int64)
    # p = 0 gives thr = 0: T <= c iff N_D* = 0.
    thr = np.floor(_scaled(c, counts) * (1.0 + TIE_EPS))
    return np.minimum(thr, counts.n_total + 1).astype(np.int64)


def _gt_thresholds(c, counts):
    """T > c  iff  N_D* >= thr[p]."""
    return _le_thresholds(c, counts) + 1


def _ge_thresholds(c, counts):
    """T >= c  iff  N_D* >= thr[p]."""
    if math.isinf(c):
        return np.full(counts.n_sample + 1, counts.n_total + 1, dtype=np.int64)
    thr = np.ceil(_scaled(c, counts) * (1.0 - TIE_EPS))
    thr = np.minimum(thr, counts.n_total + 1).astype(np.int64)
    thr[0] = 1 if c > 0 else 0
    return thr


def _observed_thresholds(counts):
    """Exact integer thresholds for T <= theta_hat and T >= theta_hat."""
    p = np.arange(counts.n_sample + 1, dtype=np.int64)
    nd, npos = counts.n_deaths, counts.n_positive
    if npos == 0:
        if nd > 0:
            raise NoPositivesError()
        return np.zeros_like(p), np.zeros_like(p)
    # T <= nd / npos (on the p scale)  iff  N_D* * npos <= nd * p
    lower = (nd * p) // npos
    upper = -((-nd * p) // npos)
    upper[0] = 1 if nd > 0 else 0
    return lower, upper


def _window(n_lo, n_hi, prob):
    sd = math.sqrt(n_hi * prob * (1.0 - prob))
    half = _WINDOW_SD * sd + _WINDOW_PAD
    lo = max(0, math.floor(n_lo * prob - half))
    hi = min(n_hi, math.ceil(n_hi * prob + half))
    return lo, hi


@functools.lru_cache(maxsize=1 << 16)
def _positives_pmf(n_total, n_sample, n_infected):
    prob = n_infected / n_total
    lo, hi = _window(n_sample, n_sample, prob)
    pmf = np.exp(binom_logpmf(np.arange(lo, hi + 1), n_sample, prob))
    pmf.setflags(write=False)
    return lo, pmf


class ExactTails:
    """Exact ``P(T in lower event)`` and ``P(T in upper event)`` batched over n_I.

    The lower event is ``N_D* <= lower_thr[N_P*]`` and the upper event
    ``N_D* >= upper_thr[N_P*]``. Instances cache the ``N_P*`` weights for
    each batch of ``n_I`` values they have seen.
    """

    def __init__(self, n_total, n_sample, lower_thr, upper_thr):
        self.n_total = n_total
        self.n_sample = n_sample
        self.lower_thr = np.asarray(lower_thr, dtype=np.int64)
        self.upper_thr = np.asarray(upper_thr, dtype=np.int64)
        self._weights = {}

    def _positive_weights(self, n_is):
        key = n_is.tobytes()
        hit = self._weights.get(key)
        if hit is not None:
            return hit
        rows = [_positives_pmf(self.n_total, self.n_sample, int(n)) for n in n_is]
        lo = min(r[0] for r in rows)
        hi = max(r[0] + len(r[1]) - 1 for r in rows)
        mat = np.zeros((len(rows), hi - lo + 1))
        for i, (start, pmf) in enumerate(rows):
            mat[i, start - lo:start - lo + len(pmf)] = pmf
        hit = (lo, mat)
        if len(self._weights) > 4096:
            self._weights.clear()
        self._weights[key] = hit
        return hit

    def __call__(self, theta0, n_infected):
        """Return ``(lower, upper)`` arrays, one entry per value in ``n_infected``."""
        n_is = np.atleast_1d(np.asarray(n_infected, dtype=np.int64))
        p_lo, w = self._positive_weights(n_is)
        p_hi = p_lo + w.shape[1] - 1
        k_lo, k_hi = _window(int(n_is.min()), int(n_is.max()), theta0)
        k = np.arange(k_lo, k_hi + 1)
        pmf = np.exp(binom_logpmf(k[None, :], n_is[:, None], theta0))
        cdf = np.cumsum(pmf, axis=1)
        sf = np.cumsum(pmf[:, ::-1], axis=1)[:, ::-1]
        width = k_hi - k_lo + 1

        j = self.lower_thr[p_lo:p_hi + 1] - k_lo
        cdf_at = np.where(j >= width, 1.0, cdf[:, np.clip(j, 0, width - 1)])
        cdf_at = np.where(j < 0, 0.0, cdf_at)

        j = self.upper_thr[p_lo:p_hi + 1] - k_lo
        sf_at = np.where(j < 0, 1.0, sf[:, np.clip(j, 0, width - 1)])
        sf_at = np.where(j >= width, 0.0, sf_at)

        lower = np.minimum((w * cdf_at).sum(axis=1), 1.0)
        upper = np.minimum((w * sf_at).sum(axis=1), 1.0)
        return lower, upper


class MonteCarloTails:
    """Monte Carlo counterpart of :class:`ExactTails`.

    Every ``(theta0, n_I)`` pair reuses the same seeded streams.
    """

    def __init__(self, counts, lower_thr, upper_thr, mode):
        self.counts = counts
        self.lower_thr = np.asarray(lower_thr, dtype=np.int64)
        self.upper_thr = np.asarray(upper_thr, dtype=np.int64)
        self.mode = mode

    def __call__(self, theta0, n_infected):
        n_is = np.atleast_1d(np.asarray(n_infected, dtype=np.int64))
        lower = np.empty(len(n_is))
        upper = np.empty(len(n_is))
        for i, n in enumerate(n_is):
            p_star, d_star = sample_counts(ModelPoint(int(n), theta0), self.counts, self.mode)
            lower[i] = np.mean(d_star <= self.lower_thr[p_star])
            upper[i] = np.mean(d_star >= self.upper_thr[p_star])
        return lower, upper


def g_cdf_exact(c, point, counts):
    """Exact ``G(c | n_I, theta0) = P(T <= c)`` under the two-binomial model."""
    c = _check_rate(c)
    point.check_against(counts)
    if math.isinf(c):
        return 1.0
    tails = ExactTails(counts.n_total, counts.n_sample, _le_thresholds(c, counts),
                       _ge_thresholds(c, counts))
    return float(tails(point.theta0, [point.n_infected])[0][0])


def g_sf_exact(c, point, counts, inclusive=False):
    """Exact upper tail ``P(T > c)`` (or ``P(T >= c)`` when ``inclusive``)."""
    c = _check_rate(c)
    point.check_against(counts)
    upper_thr = _ge_thresholds(c, counts) if inclusive else _gt_thresholds(c, counts)
    tails = ExactTails(counts.n_total, counts.n_sample, _le_thresholds(c, counts), upper_thr)
    return float(tails(point.theta0, [point.n_infected])[1][0])


def g_cdf_mc(c, point, counts, mode):
    """Empirical ``P(T <= c)`` over ``mode.replications`` seeded draws."""
    c = _check_rate(c)
    p_star, d_star = sample_counts(point, counts, mode)
    return float(np.mean(d_star <= _le_thresholds(c, counts)[p_star]))


def g_cdf(c, point, counts, mode=None):
    """``P(T <= c)`` evaluated as requested by ``mode`` (exact by default)."""
    if mode is None or mode.mode == "exact":
        return g_cdf_exact(c, point, counts)
    return g_cdf_mc(c, point, counts, mode)


def observed_tails(counts, mode=None):
    """Tail evaluator for the observed statistic: returns ``P(T <= obs), P(T >= obs)``."""
    lower_thr, upper_thr = _observed_thresholds(counts)
    if mode is None or mode.mode == "exact":
        return ExactTails(counts.n_total, counts.n_sample, lower_thr, upper_thr)
    return MonteCarloTails(counts, lower_thr, upper_thr, mode)


def equal_tailed(lower, upper):
    """Equal-tailed p-value from inclusive tail probabilities, capped at 1."""
    return np.minimum(1.0, 2.0 * np.minimum(lower, upper))


def p_value(theta0, n_infected, counts, mode=None):
    """Equal-tailed p-value of ``H0: theta = theta0`` with ``n_I = n_infected``.

    Both tails include the observed value. Raises :class:`NoPositivesError`
    when ``N_P = 0`` and ``N_D > 0``.
    """
    point = ModelPoint(n_infected, theta0)
    point.check_against(counts)
    lower, upper = observed_tails(counts, mode)(point.theta0, [point.n_infected])
    return float(equal_tailed(lower, upper)[0])


def _check_rate(c):
    c = float(c)
    if math.isnan(c) or c < 0:
        raise DomainError(f"c must be a non-negative rate, got {c}")
    return c
