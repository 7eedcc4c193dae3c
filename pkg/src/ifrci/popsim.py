"""Finite-population simulation and coverage experiments.

The population model draws the infected set and the sample as independent
uniform subsets of ``{0, ..., N_T - 1}`` and keeps the would-die indicator
fixed (its first ``N_DC`` entries are ones). The binomial model draws the
sample positives and deaths from the two independent binomials instead.
Replicate ``i`` uses its own stream derived from ``(seed, i)``.
"""

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import _rng
from ._validation import check_count, check_probability
from .exceptions import DomainError, IFRError
from .intervals import METHODS, TARGETS, CiConfig, confidence_interval
from .model import StudyCounts

MODELS = ("population", "binomial")

#: Fraction of skipped replicates above which a report is flagged.
SKIP_FLAG_FRACTION = 0.001


@dataclass(frozen=True)
class PopulationSpec:
    """Ground truth for a simulated study, conditional on ``N_I``.

    ``theta2`` defaults to ``N_DC / N_T``; an explicit real value is only
    meaningful for the binomial model.
    """

    n_total: int
    n_sample: int
    n_infected: int
    n_deaths_counterfactual: int
    replications: int = 2000
    seed: int = 0
    theta2_override: float | None = None

    def __post_init__(self):
        nt = check_count(self.n_total, "n_total", 1)
        ns = check_count(self.n_sample, "n_sample", 1)
        ni = check_count(self.n_infected, "n_infected")
        ndc = check_count(self.n_deaths_counterfactual, "n_deaths_counterfactual")
        for name, val, bound in (("n_sample", ns, nt), ("n_infected", ni, nt),
                                 ("n_deaths_counterfactual", ndc, nt)):
            if val > bound:
                raise DomainError(f"{name} ({val}) exceeds n_total ({nt})")
        object.__setattr__(self, "n_total", nt)
        object.__setattr__(self, "n_sample", ns)
        object.__setattr__(self, "n_infected", ni)
        object.__setattr__(self, "n_deaths_counterfactual", ndc)
        object.__setattr__(self, "replications", check_count(self.replications, "replications", 1))
        object.__setattr__(self, "seed", check_count(self.seed, "seed"))
        if self.theta2_override is not None:
            object.__setattr__(self, "theta2_override",
                               check_probability(self.theta2_override, "theta2"))

    @property
    def theta2(self):
        if self.theta2_override is not None:
            return self.theta2_override
        return self.n_deaths_counterfactual / self.n_total


@dataclass(frozen=True)
class PopulationDraw:
    n_positive: int
    n_deaths: int
    theta1: float | None  # None when nobody is infected


def draw_population(spec, rng):
    """Simulate the indicator vectors once and return the observed counts.

    The infected set and the sample are independent uniform subsets of sizes
    ``N_I`` and ``N_S``.
    """
    if spec.theta2_override is not None and not math.isclose(
            spec.theta2_override, spec.n_deaths_counterfactual / spec.n_total):
        raise DomainError("the population model needs theta2 = n_deaths_counterfactual / n_total")
    infected = np.zeros(spec.n_total, dtype=bool)
    infected[rng.choice(spec.n_total, spec.n_infected, replace=False, shuffle=False)] = True
    sample = rng.choice(spec.n_total, spec.n_sample, replace=False, shuffle=False)
    n_positive = int(infected[sample].sum())
    n_deaths = int(infected[:spec.n_deaths_counterfactual].sum())
    theta1 = n_deaths / spec.n_infected if spec.n_infected else None
    return PopulationDraw(n_positive, n_deaths, theta1)


def draw_binomial(spec, rng):
    """Draw the observed counts from the two independent binomials."""
    n_positive = int(rng.binomial(spec.n_sample, spec.n_infected / spec.n_total))
    n_deaths = int(rng.binomial(spec.n_infected, spec.theta2))
    theta1 = n_deaths / spec.n_infected if spec.n_infected else None
    return PopulationDraw(n_positive, n_deaths, theta1)


_DRAWERS = {"population": draw_population, "binomial": draw_binomial}


def draw_counts(spec, model, index):
    """Replicate ``index`` of the experiment, reproducible from ``spec.seed``."""
    return _DRAWERS[model](spec, _rng.stream(spec.seed, index))


def simulate_counts(spec, model="population"):
    """Arrays of ``N_P`` and ``N_D`` over ``spec.replications`` replicates."""
    if model not in MODELS:
        raise DomainError(f"model must be one of {MODELS}, got {model!r}")
    draws = [draw_counts(spec, model, i) for i in range(spec.replications)]
    return (np.array([d.n_positive for d in draws], dtype=np.int64),
            np.array([d.n_deaths for d in draws], dtype=np.int64))


@functools.lru_cache(maxsize=1 << 14)
def _interval(method, counts, config):
    # Intervals depend on the replicate only through its counts, which repeat often.
    return confidence_interval(counts, method, config)


@dataclass
class MethodTally:
    method: str
    target: str
    replications: int = 0
    skipped: int = 0
    covered_theta1: int = 0
    theta1_defined: int = 0
    covered_theta2: int = 0
    width_sum: float = 0.0
    endpoint_p_sum: float = 0.0
    endpoint_p_count: int = 0
    skip_reasons: dict = field(default_factory=dict)

    @property
    def evaluated(self):
        return self.replications - self.skipped

    @property
    def coverage_theta1(self):
        return self.covered_theta1 / self.theta1_defined if self.theta1_defined else None

    @property
    def coverage_theta2(self):
        return self.covered_theta2 / self.evaluated if self.evaluated else None

    @property
    def mean_width(self):
        return self.width_sum / self.evaluated if self.evaluated else None

    @property
    def mean_endpoint_p_value(self):
        return self.endpoint_p_sum / self.endpoint_p_count if self.endpoint_p_count else None

    def standard_error(self, level):
        n = self.evaluated
        return math.sqrt(level * (1.0 - level) / n) if n else None


@dataclass
class CoverageReport:
    """Empirical coverage of each method for both targets, plus count diagnostics."""

    model: str
    spec: PopulationSpec
    config: CiConfig
    tallies: dict
    n_positive_mean: float
    n_positive_var: float
    n_deaths_mean: float
    n_deaths_var: float
    correlation: float | None
    theta1_mean: float | None
    theta1_sd: float | None
    flags: list

    @property
    def replications(self):
        return self.spec.replications

    def rows(self):
        """One record per method x target, in the CSV column order."""
        out = []
        for method, tally in self.tallies.items():
            for target in ("theta1", "theta2"):
                if target == "theta1":
                    covered, denom = tally.covered_theta1, tally.theta1_defined
                else:
                    covered, denom = tally.covered_theta2, tally.evaluated
                out.append({
                    "method": method,
                    "target": target,
                    "model": self.model,
                    "replications": tally.replications,
                    "skipped": tally.skipped,
                    "covered": covered,
                    "coverage_rate": covered / denom if denom else None,
                    "mean_width": tally.mean_width,
                })
        return out

    def to_dict(self):
        return {
            "model": self.model,
            "n_total": self.spec.n_total,
            "n_sample": self.spec.n_sample,
            "n_infected": self.spec.n_infected,
            "n_deaths_counterfactual": self.spec.n_deaths_counterfactual,
            "theta2": self.spec.theta2,
            "replications": self.spec.replications,
            "seed": self.spec.seed,
            "alpha": self.config.alpha,
            "beta": self.config.beta,
            "methods": {
                m: {
                    "target": t.target,
                    "skipped": t.skipped,
                    "skip_reasons": dict(sorted(t.skip_reasons.items())),
                    "coverage_theta1": t.coverage_theta1,
                    "coverage_theta2": t.coverage_theta2,
                    "mean_width": t.mean_width,
                    "mean_endpoint_p_value": t.mean_endpoint_p_value,
                }
                for m, t in self.tallies.items()
            },
            "rows": self.rows(),
            "marginals": {
                "n_positive_mean": self.n_positive_mean,
                "n_positive_var": self.n_positive_var,
                "n_deaths_mean": self.n_deaths_mean,
                "n_deaths_var": self.n_deaths_var,
                "correlation": self.correlation,
                "theta1_mean": self.theta1_mean,
                "theta1_sd": self.theta1_sd,
            },
            "flags": list(self.flags),
        }


def _run_replicates(spec, config, model, methods, start, stop):
    out = []
    for i in range(start, stop):
        draw = draw_counts(spec, model, i)
        counts = StudyCounts(spec.n_total, spec.n_sample, draw.n_positive, draw.n_deaths)
        per_method = {}
        for method in methods:
            try:
                res = _interval(method, counts, config)
            except IFRError as exc:
                per_method[method] = type(exc).__name__
                continue
            p_ends = res.diagnostics.get("p_value_at_endpoints")
            per_method[method] = (res.lower, res.upper, p_ends)
        out.append((draw, per_method))
    return out


def _chunks(n, n_chunks):
    size = max(1, math.ceil(n / n_chunks))
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def coverage_experiment(spec, config=None, model="binomial", methods=METHODS, n_jobs=1):
    """Simulate ``spec.replications`` studies and tally interval coverage.

    Parameters
    ----------
    spec : PopulationSpec
    config : CiConfig, optional
    model : {"binomial", "population"}
        Generative model for the observed counts.
    methods : sequence of str
        Interval constructions to evaluate.
    n_jobs : int
        Worker processes (joblib). Tallies do not depend on this value.

    Returns
    -------
    CoverageReport
    """
    config = config or CiConfig()
    if model not in MODELS:
        raise DomainError(f"model must be one of {MODELS}, got {model!r}")
    if model == "population" and spec.theta2_override is not None and not math.isclose(
            spec.theta2_override, spec.n_deaths_counterfactual / spec.n_total):
        raise DomainError("the population model needs theta2 = n_deaths_counterfactual / n_total")
    for m in methods:
        if m not in METHODS:
            raise DomainError(f"unknown method {m!r}")

    n = spec.replications
    if n_jobs == 1:
        records = _run_replicates(spec, config, model, methods, 0, n)
    else:
        workers = Parallel(n_jobs=n_jobs)
        n_chunks = 4 * (workers.n_jobs if workers.n_jobs > 0 else 1)
        parts = workers(delayed(_run_replicates)(spec, config, model, methods, a, b)
                        for a, b in _chunks(n, n_chunks))
        records = [r for part in parts for r in part]
    return _aggregate(spec, config, model, methods, records)


def _aggregate(spec, config, model, methods, records):
    theta2 = spec.theta2
    tallies = {m: MethodTally(m, TARGETS[m], replications=len(records)) for m in methods}
    for draw, per_method in records:
        for m in methods:
            t = tallies[m]
            res = per_method[m]
            if isinstance(res, str):
                t.skipped += 1
                t.skip_reasons[res] = t.skip_reasons.get(res, 0) + 1
                continue
            lower, upper, p_ends = res
            if draw.theta1 is not None:
                t.theta1_defined += 1
                t.covered_theta1 += lower <= draw.theta1 <= upper
            t.covered_theta2 += lower <= theta2 <= upper
            t.width_sum += upper - lower
            if p_ends is not None:
                t.endpoint_p_sum += p_ends[0] + p_ends[1]
                t.endpoint_p_count += 2

    n_pos = np.array([d.n_positive for d, _ in records], dtype=float)
    n_dead = np.array([d.n_deaths for d, _ in records], dtype=float)
    theta1 = np.array([d.theta1 for d, _ in records if d.theta1 is not None], dtype=float)
    corr = None
    if len(records) > 1 and n_pos.std() > 0 and n_dead.std() > 0:
        corr = float(np.corrcoef(n_pos, n_dead)[0, 1])
    flags = []
    for t in tallies.values():
        if t.skipped > SKIP_FLAG_FRACTION * len(records):
            flags.append(f"{t.method}: {t.skipped} of {len(records)} replicates skipped")
    return CoverageReport(
        model=model,
        spec=spec,
        config=config,
        tallies=tallies,
        n_positive_mean=float(n_pos.mean()),
        n_positive_var=float(n_pos.var(ddof=1)) if len(n_pos) > 1 else 0.0,
        n_deaths_mean=float(n_dead.mean()),
        n_deaths_var=float(n_dead.var(ddof=1)) if len(n_dead) > 1 else 0.0,
        correlation=corr,
        theta1_mean=float(theta1.mean()) if len(theta1) else None,
        theta1_sd=float(theta1.std(ddof=1)) if len(theta1) > 1 else None,
        flags=flags,
    )
