"""scikit-learn compatible wrapper around the interval constructions.

A study is a row ``(n_total, n_sample, n_positive, n_deaths)``.
:class:`IFRInterval` fits one study and exposes the estimates and interval
as fitted attributes; ``transform`` maps a batch of studies to intervals so
the estimator can sit inside a pipeline or be cloned with new parameters.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_counts_array
from .exceptions import DomainError, NoPositivesError
from .intervals import METHODS, TARGETS, CiConfig, confidence_interval
from .model import EvalMode, StudyCounts, estimate

_FEATURES = np.array(["n_total", "n_sample", "n_positive", "n_deaths"], dtype=object)


def as_study_counts(X):
    """Coerce a StudyCounts, mapping or length-4 sequence into :class:`StudyCounts`."""
    if isinstance(X, StudyCounts):
        return X
    if isinstance(X, dict):
        try:
            return StudyCounts(**{k: X[k] for k in _FEATURES})
        except KeyError as exc:
            raise DomainError(f"missing study field {exc.args[0]!r}") from None
    arr = check_counts_array(X)
    if arr.shape[0] != 1:
        raise DomainError(f"expected a single study, got {arr.shape[0]} rows")
    return StudyCounts(*(int(v) for v in arr[0]))


class IFRInterval(TransformerMixin, BaseEstimator):
    """Confidence interval for the infection fatality rate of one study.

    Parameters
    ----------
    method : {"cs", "pb", "scaled"}, default="cs"
        Interval construction. ``scaled`` targets the realised IFR among the
        infected; ``pb`` and ``cs`` target the population IFR.
    alpha : float, default=0.05
        Miscoverage level.
    beta : float, default=0.01
        Level of the preliminary interval for the number of infections
        (``cs`` only); must be below ``alpha``.
    mode : {"exact", "monte_carlo"}, default="exact"
    replications : int, default=200_000
        Monte Carlo draws per evaluation (``mode="monte_carlo"``).
    random_state : int, default=0
        Seed of the Monte Carlo streams.
    theta_grid_step, endpoint_tol : float
        Scan step and bisection tolerance on the IFR axis.
    n_i_stride : int, default=1
        Stride of the nuisance scan for ``cs``.

    Attributes
    ----------
    counts_ : StudyCounts
    n_infected_hat_ : float
    theta_hat_ : float or None
        ``None`` when the sample has no positives.
    interval_ : Interval
    target_ : {"theta1", "theta2"}
    result_ : CiResult
    """

    def __init__(self, method="cs", alpha=0.05, beta=0.01, mode="exact",
                 replications=200_000, random_state=0, theta_grid_step=1e-4,
                 endpoint_tol=1e-6, n_i_stride=1):
        self.method = method
        self.alpha = alpha
        self.beta = beta
        self.mode = mode
        self.replications = replications
        self.random_state = random_state
        self.theta_grid_step = theta_grid_step
        self.endpoint_tol = endpoint_tol
        self.n_i_stride = n_i_stride

    def _config(self):
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}, got {self.method!r}")
        return CiConfig(
            alpha=self.alpha,
            beta=self.beta,
            eval_mode=EvalMode(self.mode, self.replications, self.random_state),
            theta_grid_step=self.theta_grid_step,
            endpoint_tol=self.endpoint_tol,
            n_i_stride=self.n_i_stride,
        )

    def fit(self, X, y=None):
        """Compute the estimates and interval for a single study ``X``."""
        config = self._config()
        counts = as_study_counts(X)
        try:
            _, theta_hat = estimate(counts)
        except NoPositivesError:
            theta_hat = None
        self.result_ = confidence_interval(counts, self.method, config)
        self.counts_ = counts
        self.n_infected_hat_ = counts.n_infected_hat
        self.theta_hat_ = theta_hat
        self.interval_ = self.result_.interval
        self.target_ = TARGETS[self.method]
        self.n_features_in_ = 4
        return self

    def transform(self, X):
        """Return an ``(m, 2)`` array of ``[lower, upper]`` for ``m`` studies.

        Unbounded upper endpoints are ``inf``; studies the method cannot
        handle (no positives for ``pb``) give ``nan`` rows.
        """
        check_is_fitted(self, "result_")
        config = self._config()
        arr = check_counts_array(X)
        out = np.full((arr.shape[0], 2), np.nan)
        for i, row in enumerate(arr):
            try:
                res = confidence_interval(StudyCounts(*(int(v) for v in row)), self.method, config)
            except NoPositivesError:
                continue
            out[i] = res.lower, res.upper
        return out

    def get_feature_names_out(self, input_features=None):
        return np.array(["lower", "upper"], dtype=object)
