"""Confidence intervals for the infection fatality rate.

Three constructions are provided:

``scaled``
    A Clopper-Pearson interval for the infected share, rescaled to the IFR.
    It targets the realised rate among the infected (``theta1``).
``pb``
    Inversion of the equal-tailed test with the number of infections fixed
    at its rounded estimate (parametric bootstrap). Targets ``theta2``.
``cs``
    Inversion of the test after maximising its p-value over a preliminary
    ``1 - beta`` interval for the number of infections, adding ``beta``
    back. Targets ``theta2`` with finite-sample conditional coverage.

The test-inversion intervals are located by scanning a grid on the theta
axis outward from the point estimate until the first rejected grid point,
then bisecting between the last accepted and first rejected points.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._search import bisect_edge
from ._validation import check_count, check_positive_real, check_probability
from .binom import Interval, clopper_pearson
from .exceptions import DomainError, NoPositivesError, NumericalError
from .model import EvalMode, equal_tailed, estimate, observed_statistic, observed_tails

METHODS = ("scaled", "pb", "cs")
TARGETS = {"scaled": "theta1", "pb": "theta2", "cs": "theta2"}


@dataclass(frozen=True)
class CiConfig:
    """Settings shared by all interval constructions.

    ``verify_connected`` re-evaluates the acceptance rule on the whole grid
    and warns about accepted points outside the reported interval.
    """

    alpha: float = 0.05
    beta: float = 0.01
    eval_mode: EvalMode = field(default_factory=EvalMode)
    theta_grid_step: float = 1e-4
    endpoint_tol: float = 1e-6
    n_i_stride: int = 1
    verify_connected: bool = False

    def __post_init__(self):
        alpha = check_probability(self.alpha, "alpha", open_left=True, open_right=True)
        beta = check_probability(self.beta, "beta", open_left=True, open_right=True)
        if not beta < alpha:
            raise DomainError(f"beta ({beta}) must be smaller than alpha ({alpha})")
        step = check_positive_real(self.theta_grid_step, "theta_grid_step")
        tol = check_positive_real(self.endpoint_tol, "endpoint_tol")
        if not tol < step:
            raise DomainError("endpoint_tol must be smaller than theta_grid_step")
        if step > 1:
            raise DomainError("theta_grid_step must not exceed 1")
        if not isinstance(self.eval_mode, EvalMode):
            raise DomainError("eval_mode must be an EvalMode")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "theta_grid_step", step)
        object.__setattr__(self, "endpoint_tol", tol)
        object.__setattr__(self, "n_i_stride", check_count(self.n_i_stride, "n_i_stride", 1))
        object.__setattr__(self, "verify_connected", bool(self.verify_connected))


@dataclass(frozen=True)
class CiResult:
    method: str
    interval: Interval
    target: str
    diagnostics: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def lower(self):
        return self.interval.lower

    @property
    def upper(self):
        return self.interval.upper


def round_half_away(x):
    """Nearest integer, ties away from zero."""
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def ci_scaled(counts, config=None):
    """Clopper-Pearson interval for the infected share, mapped to the IFR scale."""
    config = config or CiConfig()
    cp = clopper_pearson(counts.n_positive, counts.n_sample, 1.0 - config.alpha)
    nd, nt = counts.n_deaths, counts.n_total
    if nd == 0:
        interval = Interval(0.0, 0.0)
    else:
        lower = nd / (nt * cp.upper)
        upper = math.inf if cp.lower == 0 else nd / (nt * cp.lower)
        interval = Interval(lower, upper)
    diagnostics = {
        "proportion_interval": (cp.lower, cp.upper),
        "evaluations": 0,
        "n_i_range": None,
        "n_i_used": None,
        "p_value_at_endpoints": None,
        "argmax_n_i_at_endpoints": None,
        "outside_accepted": None,
    }
    return CiResult("scaled", interval, "theta1", diagnostics)


class _Acceptance:
    """Memoised acceptance rule ``theta0 -> (accepted, p, argmax n_I)``."""

    def __init__(self, rule):
        self.rule = rule
        self.seen = {}

    def full(self, theta):
        hit = self.seen.get(theta)
        if hit is None:
            hit = self.seen[theta] = self.rule(theta)
        return hit

    def __call__(self, theta):
        return self.full(theta)[0]


def _grid_theta(k, step):
    return min(1.0, max(0.0, k * step))


def _edge(accept, start, step, tol, direction):
    """Scan the grid from ``start`` in ``direction`` (+1/-1), then bisect."""
    inside = start
    if direction > 0:
        k = math.floor(start / step) + 1
        boundary = 1.0
    else:
        k = math.ceil(start / step) - 1
        boundary = 0.0
    while True:
        theta = _grid_theta(k, step)
        if (theta - start) * direction <= 0:
            # start already sits at the boundary of [0, 1]
            return boundary
        if not accept(theta):
            break
        if theta == boundary:
            return boundary
        inside = theta
        k += direction
    inside, _ = bisect_edge(accept, inside, theta, tol)
    return inside


def _invert(acceptance, start, config):
    step, tol = config.theta_grid_step, config.endpoint_tol
    start = min(max(start, 0.0), 1.0)
    if not acceptance(start):
        grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
        accepted = [t for t in grid if acceptance(float(t))]
        if not accepted:
            raise NumericalError("empty acceptance region: no theta0 in [0, 1] is accepted")
        start = float(min(accepted, key=lambda t: abs(t - start)))
    lower = _edge(acceptance, start, step, tol, -1)
    upper = _edge(acceptance, start, step, tol, +1)
    outside = None
    if config.verify_connected:
        grid = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
        outside = [float(t) for t in grid if not lower <= t <= upper and acceptance(float(t))]
        if outside:
            warnings.warn(
                f"acceptance region is not connected: {len(outside)} grid points "
                f"accepted outside [{lower}, {upper}]",
                RuntimeWarning,
                stacklevel=3,
            )
    _, p_lo, n_lo = acceptance.full(lower)
    _, p_hi, n_hi = acceptance.full(upper)
    diagnostics = {
        "evaluations": len(acceptance.seen),
        "p_value_at_endpoints": (p_lo, p_hi),
        "argmax_n_i_at_endpoints": (n_lo, n_hi),
        "outside_accepted": outside,
        "grid": sorted(acceptance.seen),
    }
    return Interval(lower, upper), diagnostics


def ci_pb(counts, config=None):
    """Invert the equal-tailed test with ``n_I`` fixed at ``round(N_hat_I)``."""
    config = config or CiConfig()
    n_i_hat, theta_hat = estimate(counts)
    n_i = round_half_away(n_i_hat)
    tails = observed_tails(counts, config.eval_mode)
    alpha = config.alpha

    def rule(theta):
        lower, upper = tails(theta, [n_i])
        p = float(equal_tailed(lower, upper)[0])
        return p >= alpha, p, n_i

    interval, diagnostics = _invert(_Acceptance(rule), theta_hat, config)
    diagnostics.update(proportion_interval=None, n_i_range=None, n_i_used=n_i)
    return CiResult("pb", interval, "theta2", diagnostics)


def prelim_n_i_range(counts, config=None):
    """Integer ``1 - beta`` Clopper-Pearson range for the number of infections.

    The range is intersected with ``[N_D, N_T]``: the true number of
    infections can never be below the observed deaths.
    """
    config = config or CiConfig()
    cp = clopper_pearson(counts.n_positive, counts.n_sample, 1.0 - config.beta)
    lo = math.ceil(counts.n_total * cp.lower) if cp.lower > 0 else 0
    hi = counts.n_total if cp.upper >= 1 else math.floor(counts.n_total * cp.upper)
    lo = max(lo, counts.n_deaths)
    hi = min(hi, counts.n_total)
    if hi < lo:
        raise NumericalError(f"empty nuisance range [{lo}, {hi}] for the number of infections")
    return range(lo, hi + 1)


def _sup_p_value(tails, theta, n_range, stride):
    coarse = np.arange(n_range.start, n_range.stop, stride, dtype=np.int64)
    if coarse[-1] != n_range.stop - 1:
        coarse = np.append(coarse, n_range.stop - 1)
    p = equal_tailed(*tails(theta, coarse))
    best = int(np.argmax(p))
    if stride > 1:
        centre = int(coarse[best])
        fine = np.arange(max(n_range.start, centre - stride + 1),
                         min(n_range.stop, centre + stride), dtype=np.int64)
        p_fine = equal_tailed(*tails(theta, fine))
        j = int(np.argmax(p_fine))
        if p_fine[j] > p[best]:
            return float(p_fine[j]), int(fine[j])
    return float(p[best]), int(coarse[best])


def ci_cs(counts, config=None):
    """Invert the test maximised over the preliminary range, with the beta correction."""
    config = config or CiConfig()
    if counts.n_positive == 0 and counts.n_deaths > 0:
        raise NoPositivesError()
    n_range = prelim_n_i_range(counts, config)
    tails = observed_tails(counts, config.eval_mode)
    alpha, beta, stride = config.alpha, config.beta, config.n_i_stride

    def rule(theta):
        p, n_star = _sup_p_value(tails, theta, n_range, stride)
        return p + beta >= alpha, p, n_star

    interval, diagnostics = _invert(_Acceptance(rule), observed_statistic(counts), config)
    diagnostics.update(
        proportion_interval=None,
        n_i_range=(n_range.start, n_range.stop - 1),
        n_i_used=None,
    )
    return CiResult("cs", interval, "theta2", diagnostics)


_BUILDERS = {"scaled": ci_scaled, "pb": ci_pb, "cs": ci_cs}


def confidence_interval(counts, method="cs", config=None):
    """Dispatch to :func:`ci_scaled`, :func:`ci_pb` or :func:`ci_cs` by name."""
    try:
        builder = _BUILDERS[method]
    except KeyError:
        raise DomainError(f"unknown method {method!r}; expected one of {METHODS}") from None
    return builder(counts, config)
