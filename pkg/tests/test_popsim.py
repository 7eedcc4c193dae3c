import math

import numpy as np
import pytest
from scipy import stats

from ifrci.exceptions import DomainError
from ifrci.intervals import CiConfig
from ifrci.popsim import (
    PopulationSpec,
    coverage_experiment,
    draw_counts,
    draw_population,
    simulate_counts,
)

from oracles import hypergeom_pmf


def _gof_pvalue(sample, pmf, support):
    """Chi-square goodness of fit, pooling cells with expected count below 5."""
    n = len(sample)
    observed = np.bincount(sample, minlength=support[-1] + 1)[support]
    expected = n * pmf
    cells_o, cells_e, acc_o, acc_e = [], [], 0.0, 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 5:
            cells_o.append(acc_o)
            cells_e.append(acc_e)
            acc_o = acc_e = 0.0
    cells_o[-1] += acc_o
    cells_e[-1] += acc_e
    cells_e = np.array(cells_e) * n / np.sum(cells_e)
    return stats.chisquare(cells_o, cells_e).pvalue


def test_spec_validation():
    with pytest.raises(DomainError):
        PopulationSpec(100, 200, 10, 5)
    with pytest.raises(DomainError):
        PopulationSpec(100, 20, 101, 5)
    assert PopulationSpec(100, 20, 10, 5).theta2 == 0.05
    assert PopulationSpec(100, 20, 10, 5, theta2_override=0.3).theta2 == 0.3


def test_everyone_infected():
    spec = PopulationSpec(300, 40, 300, 17)
    rng = np.random.default_rng(0)
    for _ in range(20):
        d = draw_population(spec, rng)
        assert (d.n_positive, d.n_deaths) == (40, 17)
        assert d.theta1 == pytest.approx(spec.theta2)


def test_nobody_would_die():
    spec = PopulationSpec(300, 40, 120, 0)
    rng = np.random.default_rng(1)
    assert all(draw_population(spec, rng).n_deaths == 0 for _ in range(50))


def test_nobody_infected():
    d = draw_population(PopulationSpec(300, 40, 0, 10), np.random.default_rng(2))
    assert d.theta1 is None and d.n_positive == 0


def test_population_positives_are_hypergeometric():
    spec = PopulationSpec(500, 60, 100, 20, replications=100_000, seed=8)
    n_pos, _ = simulate_counts(spec, "population")
    support = np.arange(61)
    assert _gof_pvalue(n_pos, hypergeom_pmf(support, 500, 100, 60), support) > 0.001


def test_binomial_positives_are_binomial():
    spec = PopulationSpec(500, 60, 100, 20, replications=100_000, seed=8)
    n_pos, n_dead = simulate_counts(spec, "binomial")
    support = np.arange(61)
    assert _gof_pvalue(n_pos, stats.binom.pmf(support, 60, 0.2), support) > 0.001
    support = np.arange(101)
    assert _gof_pvalue(n_dead, stats.binom.pmf(support, 100, 0.04), support) > 0.001


def test_draws_reproducible():
    spec = PopulationSpec(400, 50, 90, 12, seed=77)
    assert draw_counts(spec, "population", 5) == draw_counts(spec, "population", 5)
    assert draw_counts(spec, "binomial", 5) == draw_counts(spec, "binomial", 5)


def test_zero_theta2_always_covered():
    spec = PopulationSpec(2000, 200, 300, 0, replications=60, seed=4)
    report = coverage_experiment(spec, CiConfig(n_i_stride=4), "population")
    for row in report.rows():
        if row["target"] == "theta2":
            assert row["coverage_rate"] == 1.0


def test_skips_are_reported():
    spec = PopulationSpec(200, 5, 10, 4, replications=200, seed=1)
    report = coverage_experiment(spec, CiConfig(theta_grid_step=1e-3, n_i_stride=4), "binomial")
    pb = report.tallies["pb"]
    assert pb.skipped > 0
    assert pb.skip_reasons.get("NoPositivesError", 0) > 0
    assert pb.evaluated + pb.skipped == 200
    assert any(flag.startswith("pb:") for flag in report.flags)
    rows = {(r["method"], r["target"]): r for r in report.rows()}
    assert rows["pb", "theta2"]["skipped"] == pb.skipped


def test_parallel_matches_serial():
    spec = PopulationSpec(3000, 300, 450, 12, replications=24, seed=9)
    config = CiConfig(n_i_stride=8)
    serial = coverage_experiment(spec, config, "population", n_jobs=1)
    parallel = coverage_experiment(spec, config, "population", n_jobs=2)
    assert serial.to_dict() == parallel.to_dict()


def test_population_model_rejects_real_theta2():
    spec = PopulationSpec(300, 40, 100, 10, theta2_override=0.2)
    with pytest.raises(DomainError):
        coverage_experiment(spec, model="population", methods=())
    with pytest.raises(DomainError):
        coverage_experiment(PopulationSpec(300, 40, 100, 10), model="urn")


def test_binomial_model_accepts_real_theta2():
    spec = PopulationSpec(300, 40, 100, 0, replications=2000, seed=3, theta2_override=0.123)
    _, n_dead = simulate_counts(spec, "binomial")
    se = math.sqrt(100 * 0.123 * 0.877 / 2000)
    assert abs(n_dead.mean() - 12.3) < 4 * se


def test_study_scale_models_agree(coverage_binomial, coverage_population):
    a = coverage_binomial.tallies["cs"].coverage_theta2
    b = coverage_population.tallies["cs"].coverage_theta2
    assert abs(a - b) < 0.02


def test_study_scale_population_coverage(coverage_population):
    reps = coverage_population.tallies["cs"].evaluated
    margin = 2 * math.sqrt(0.05 * 0.95 / reps)
    assert coverage_population.tallies["cs"].coverage_theta2 >= 0.95 - margin
    assert coverage_population.tallies["scaled"].coverage_theta1 >= 0.95 - margin
