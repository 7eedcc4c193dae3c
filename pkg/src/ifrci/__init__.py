"""Infection fatality rate estimation with confidence intervals for the
realised and the population fatality rate."""

__version__ = "0.1.0"

from .binom import Interval, binom_cdf, binom_pmf, binom_sf, clopper_pearson
from .estimator import IFRInterval
from .exceptions import DomainError, IFRError, NoPositivesError, NumericalError
from .intervals import (
    METHODS,
    CiConfig,
    CiResult,
    ci_cs,
    ci_pb,
    ci_scaled,
    confidence_interval,
    prelim_n_i_range,
)
from .model import (
    EvalMode,
    ModelDraw,
    ModelPoint,
    StudyCounts,
    estimate,
    g_cdf_exact,
    g_cdf_mc,
    p_value,
    sample_model,
)
from .popsim import (
    CoverageReport,
    PopulationSpec,
    coverage_experiment,
    draw_population,
)

__all__ = [
    "CiConfig", "CiResult", "CoverageReport", "DomainError", "EvalMode", "IFRError",
    "IFRInterval", "Interval", "METHODS", "ModelDraw", "ModelPoint", "NoPositivesError",
    "NumericalError", "PopulationSpec", "StudyCounts", "binom_cdf", "binom_pmf", "binom_sf",
    "ci_cs", "ci_pb", "ci_scaled", "clopper_pearson", "confidence_interval",
    "coverage_experiment", "draw_population", "estimate", "g_cdf_exact", "g_cdf_mc",
    "p_value", "prelim_n_i_range", "sample_model",
]
